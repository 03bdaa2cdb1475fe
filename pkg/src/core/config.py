import os
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

_SIZE_PATTERN = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([KMGT]i?B|B)?\s*$", re.IGNORECASE)
_UNITS = {
    None: 1, "B": 1,
    "KB": 10**3, "MB": 10**6, "GB": 10**9, "TB": 10**12,
    "KIB": 2**10, "MIB": 2**20, "GIB": 2**30, "TIB": 2**40,
}


def parse_bytes(value: Any) -> int:
    """Parse ``1048576``, ``"1MiB"`` or ``"0.25 MiB"`` into a byte count."""
    if isinstance(value, bool):
        raise ValueError(f"invalid byte size: {value!r}")
    if isinstance(value, (int, float)):
        return int(value)
    match = _SIZE_PATTERN.match(str(value))
    if not match:
        raise ValueError(f"invalid byte size: {value!r}")
    number, unit = match.groups()
    return int(float(number) * _UNITS[unit.upper() if unit else None])


def _parse_slots(raw: str) -> List[int]:
    return [parse_bytes(part) for part in raw.split(",") if part.strip()]


@dataclass
class EngineConfig:
    """Engine-wide settings, read from the environment."""

    seed: int = field(default_factory=lambda: int(os.getenv("DJ_SEED", "42")))
    log_level: str = field(default_factory=lambda: os.getenv("DJ_LOG_LEVEL", "INFO").upper())
    work_dir: str = field(default_factory=lambda: os.getenv("DJ_WORK_DIR", "./outputs"))
    default_batch_size: int = field(default_factory=lambda: int(os.getenv("DJ_BATCH_SIZE", "1000")))
    probe_size: int = field(default_factory=lambda: int(os.getenv("DJ_PROBE_SIZE", "1000")))
    mem_utilization: float = field(
        default_factory=lambda: float(os.getenv("DJ_MEM_UTILIZATION", "0.9")))
    accel_slots: List[int] = field(
        default_factory=lambda: _parse_slots(os.getenv("DJ_ACCEL_SLOTS", "")))
    monitor_interval: float = field(
        default_factory=lambda: float(os.getenv("DJ_MONITOR_INTERVAL", "1.0")))

    def __post_init__(self) -> None:
        """Validate configuration after initialization."""
        if self.log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError("DJ_LOG_LEVEL must be one of DEBUG, INFO, WARNING, ERROR, CRITICAL")
        if not self.work_dir:
            raise ValueError("DJ_WORK_DIR must be set")
        if self.default_batch_size < 1:
            raise ValueError("DJ_BATCH_SIZE must be >= 1")
        if self.probe_size < 1:
            raise ValueError("DJ_PROBE_SIZE must be >= 1")
        if not 0 < self.mem_utilization <= 1:
            raise ValueError("DJ_MEM_UTILIZATION must be in (0, 1]")
        if self.monitor_interval <= 0:
            raise ValueError("DJ_MONITOR_INTERVAL must be > 0")
        if any(slot <= 0 for slot in self.accel_slots):
            raise ValueError("DJ_ACCEL_SLOTS entries must be positive sizes")

    @classmethod
    def from_env(cls, **overrides: Any) -> 'EngineConfig':
        """Create configuration from environment variables."""
        return cls(**overrides)

    def as_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary."""
        return {
            'DJ_SEED': self.seed,
            'DJ_LOG_LEVEL': self.log_level,
            'DJ_WORK_DIR': self.work_dir,
            'DJ_BATCH_SIZE': self.default_batch_size,
            'DJ_PROBE_SIZE': self.probe_size,
            'DJ_MEM_UTILIZATION': self.mem_utilization,
            'DJ_ACCEL_SLOTS': list(self.accel_slots),
            'DJ_MONITOR_INTERVAL': self.monitor_interval,
        }


def default_seed(config: Optional[EngineConfig] = None) -> int:
    return (config or EngineConfig.from_env()).seed
