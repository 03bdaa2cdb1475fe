"""Size-targeted splitting of a JSONL source into line-aligned parts."""
import hashlib
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Dict, List, Optional

import orjson

from src.core.exceptions import SourceNotFound, TargetUnwritable
from src.core.io.dataset import list_parts

logger = logging.getLogger(__name__)

DEFAULT_TARGET_BYTES = 128 * 1024 * 1024


@dataclass
class SplitPart:
    path: str
    byte_size: int
    sample_count: int


@dataclass
class SplitManifest:
    parts: List[SplitPart]
    target_bytes: int
    origin_digest: str
    warnings: List[str] = field(default_factory=list)

    @property
    def part_paths(self) -> List[str]:
        return [part.path for part in self.parts]

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SplitManifest':
        return cls(parts=[SplitPart(**p) for p in data["parts"]],
                   target_bytes=data["target_bytes"], origin_digest=data["origin_digest"],
                   warnings=data.get("warnings", []))


class _PartWriter:
    def __init__(self, out_dir: Path) -> None:
        self.out_dir = out_dir
        self.parts: List[SplitPart] = []
        self._handle: Optional[BinaryIO] = None

    @property
    def index(self) -> int:
        return len(self.parts) - 1

    @property
    def current(self) -> SplitPart:
        return self.parts[-1]

    def open_next(self) -> None:
        self.close()
        path = self.out_dir / f"part-{len(self.parts):05d}.jsonl"
        self._handle = path.open("wb")
        self.parts.append(SplitPart(str(path), 0, 0))

    def write(self, line: bytes) -> None:
        assert self._handle is not None
        self._handle.write(line)
        self.current.byte_size += len(line)
        if line.strip():
            self.current.sample_count += 1

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def split_subsets(source: str | Path, target_bytes: int = DEFAULT_TARGET_BYTES,
                  part_count_hint: Optional[int] = None,
                  out_dir: Optional[str | Path] = None) -> SplitManifest:
    """
    Split a source into parts of at most ``target_bytes`` without cutting lines.

    With ``part_count_hint`` the source is spread over
    ``max(hint, ceil(total / target_bytes))`` parts by byte offset, so every
    simulated node gets a part even when the source is small. The size bound wins
    over the hint: when whole lines do not fit the hinted layout, extra parts are opened.
    """
    if target_bytes <= 0:
        raise ValueError("target_bytes must be > 0")
    source = Path(source)
    if not source.exists():
        raise SourceNotFound(f"dataset source not found: {source}", path=str(source))
    inputs = list_parts(source)
    total = sum(p.stat().st_size for p in inputs)
    out = Path(out_dir) if out_dir else source.parent / f"{source.stem}_split"
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise TargetUnwritable(f"cannot create {out}: {e}") from e

    needed = max(1, math.ceil(total / target_bytes))
    wanted = max(part_count_hint, needed) if part_count_hint else 1
    digest = hashlib.sha256()
    warnings: List[str] = []
    writer = _PartWriter(out)
    writer.open_next()
    offset = 0
    shift = 0

    for path in inputs:
        with path.open("rb") as handle:
            for line_no, line in enumerate(handle, start=1):
                digest.update(line)
                if part_count_hint and total:
                    desired = offset * wanted // total + shift
                    while writer.index < desired:
                        writer.open_next()
                if writer.current.byte_size and writer.current.byte_size + len(line) > target_bytes:
                    writer.open_next()
                    shift += 1
                if len(line) > target_bytes:
                    warnings.append(f"OversizedSample: {path}:{line_no} is {len(line)} bytes "
                                    f"(target {target_bytes})")
                writer.write(line)
                offset += len(line)
    while part_count_hint and len(writer.parts) < wanted:
        writer.open_next()
    writer.close()

    manifest = SplitManifest(writer.parts, target_bytes, digest.hexdigest(), warnings)
    (out / "manifest.json").write_bytes(orjson.dumps(manifest.as_dict(), option=orjson.OPT_INDENT_2))
    for warning in warnings:
        logger.warning(warning)
    logger.info(f"split {source} ({total} bytes) into {len(manifest.parts)} part(s) under {out}")
    return manifest
