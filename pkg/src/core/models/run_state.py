"""Run-time state: counters, fault policy, monitor samples and checkpoints."""
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Tuple


class FaultMode(str, Enum):
    SKIP_BATCH = "skip_batch"
    FILL_EMPTY = "fill_empty"
    ABORT = "abort"


@dataclass
class FaultPolicy:
    mode: FaultMode = FaultMode.SKIP_BATCH
    max_retries: int = 1
    backoff: Tuple[float, ...] = (0.1, 0.2, 0.4)

    def __post_init__(self) -> None:
        self.mode = FaultMode(self.mode)
        self.backoff = tuple(float(b) for b in self.backoff)
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if any(b < 0 for b in self.backoff):
            raise ValueError("backoff delays must be >= 0")

    def delay(self, attempt: int) -> float:
        """Delay before retry ``attempt`` (1-based); the last step repeats."""
        if not self.backoff:
            return 0.0
        return self.backoff[min(attempt, len(self.backoff)) - 1]


@dataclass
class RunCounters:
    """Exact sample accounting for one pipeline run."""
    processed: int = 0
    kept: int = 0
    dropped_by_filter: Dict[str, int] = field(default_factory=dict)
    dedup_removed: int = 0
    skipped_batches: int = 0
    lost_in_skipped_batches: int = 0
    placeholder_samples: int = 0
    retried_batches: int = 0
    malformed_lines: int = 0
    samples_added: int = 0
    samples_merged: int = 0
    wall_time: Dict[str, float] = field(default_factory=dict)
    skipped_ordinals: Dict[str, List[int]] = field(default_factory=dict)

    def drop(self, op_key: str, count: int) -> None:
        self.dropped_by_filter[op_key] = self.dropped_by_filter.get(op_key, 0) + count

    def add_time(self, op_key: str, seconds: float) -> None:
        self.wall_time[op_key] = self.wall_time.get(op_key, 0.0) + seconds

    def conservation_holds(self) -> bool:
        inflow = self.processed + self.samples_added
        outflow = (self.kept + sum(self.dropped_by_filter.values()) + self.dedup_removed
                   + self.lost_in_skipped_batches + self.samples_merged)
        return inflow == outflow

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunCounters':
        return cls(**data)


@dataclass
class MonitorSample:
    timestamp: float
    elapsed: float
    throughput: float
    queue_depth: int
    op_time: Dict[str, float]
    rss_bytes: int
    current_op: str = ""

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Checkpoint:
    recipe_digest: str
    completed_op_index: int
    dataset_snapshot: str
    counters: RunCounters
    plan: Dict[str, Any] = field(default_factory=dict)
    part_digests: List[str] = field(default_factory=list)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "recipe_digest": self.recipe_digest,
            "completed_op_index": self.completed_op_index,
            "dataset_snapshot": self.dataset_snapshot,
            "counters": self.counters.as_dict(),
            "plan": self.plan,
            "part_digests": list(self.part_digests),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Checkpoint':
        return cls(
            recipe_digest=data["recipe_digest"],
            completed_op_index=data["completed_op_index"],
            dataset_snapshot=data["dataset_snapshot"],
            counters=RunCounters.from_dict(data["counters"]),
            plan=data.get("plan", {}),
            part_digests=data.get("part_digests", []),
        )
