"""Dataset loading, iteration and export over JSONL files."""
import logging
import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import orjson

from src.core.exceptions import EmptySource, RefineryError, SourceNotFound, TargetUnwritable
from src.core.models.plan import Batch
from src.core.models.sample import Sample

logger = logging.getLogger(__name__)


class LoadMode(str, Enum):
    MATERIALIZED = "materialized"
    STREAMING = "streaming"


@dataclass(frozen=True)
class BadLine:
    """A source line that could not be turned into a sample."""
    path: str
    line_no: int
    error: str


@dataclass
class ExportReport:
    sample_count: int
    byte_count: int
    dropped_placeholders: int = 0


def list_parts(source: Path) -> List[Path]:
    """Data files of a source, in load order."""
    if source.is_file():
        return [source]
    parts = sorted(
        p for p in source.iterdir()
        if p.is_file() and not p.name.startswith(".") and p.suffix in (".jsonl", "")
    )
    return parts


def read_jsonl(path: Path, bad_lines: Optional[List[BadLine]] = None) -> Iterator[Sample]:
    """Yield samples of one JSONL file; undecodable lines go to ``bad_lines``."""
    with path.open("rb") as handle:
        for line_no, line in enumerate(handle, start=1):
            try:
                if not line.strip():
                    raise ValueError("empty line")
                yield Sample.from_json(line)
            except (orjson.JSONDecodeError, ValueError, RefineryError) as e:
                if bad_lines is not None:
                    bad_lines.append(BadLine(str(path), line_no, str(e)))
                logger.warning(f"malformed line {path}:{line_no}: {e}")


def iter_batches(samples: Iterable[Sample], batch_size: int, start: int = 0) -> Iterator[Batch]:
    """Group samples into ordinal-tagged batches of at most ``batch_size``."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    buffer: List[Sample] = []
    ordinals: List[int] = []
    for ordinal, sample in enumerate(samples, start=start):
        buffer.append(sample)
        ordinals.append(ordinal)
        if len(buffer) == batch_size:
            yield Batch(buffer, ordinals)
            buffer, ordinals = [], []
    if buffer:
        yield Batch(buffer, ordinals)


class Dataset:
    """An ordered collection of samples, either held in memory or streamed from disk."""

    def __init__(self, sources: Sequence[Path] = (), mode: LoadMode = LoadMode.MATERIALIZED,
                 samples: Optional[List[Sample]] = None,
                 bad_lines: Optional[List[BadLine]] = None,
                 base_dir: Optional[str] = None) -> None:
        self.sources = [Path(s) for s in sources]
        self.mode = LoadMode(mode)
        self._samples = samples
        self.bad_lines: List[BadLine] = list(bad_lines or [])
        self.base_dir = base_dir
        self._count: Optional[int] = len(samples) if samples is not None else None

    @classmethod
    def from_samples(cls, samples: Iterable[Sample], base_dir: Optional[str] = None) -> 'Dataset':
        return cls(samples=list(samples), base_dir=base_dir)

    @property
    def sample_count(self) -> Optional[int]:
        return self._count

    @property
    def schema_prototype(self) -> Optional[Sample]:
        for sample in self:
            return sample
        return None

    def __iter__(self) -> Iterator[Sample]:
        if self._samples is not None:
            return iter(self._samples)
        return self._stream()

    def _stream(self) -> Iterator[Sample]:
        bad: List[BadLine] = []
        count = 0
        for path in self.sources:
            for sample in read_jsonl(path, bad):
                count += 1
                yield sample
        self.bad_lines = bad
        self._count = count

    def __len__(self) -> int:
        if self._count is None:
            self._count = sum(1 for _ in self)
        return self._count

    def iter_batches(self, batch_size: int) -> Iterator[Batch]:
        return iter_batches(self, batch_size)

    def materialize(self) -> 'Dataset':
        if self._samples is not None:
            return self
        samples = list(self._stream())
        return Dataset(self.sources, LoadMode.MATERIALIZED, samples, self.bad_lines, self.base_dir)


def load(source: str | Path | Sequence[str | Path],
         mode: LoadMode | str = LoadMode.MATERIALIZED) -> Dataset:
    """
    Load a JSONL file, a directory of parts, or a list of either.

    Raises:
        SourceNotFound: If a source path does not exist
        EmptySource: If no line of the source yields a sample
    """
    sources = [source] if isinstance(source, (str, Path)) else list(source)
    parts: List[Path] = []
    for item in sources:
        path = Path(item)
        if not path.exists():
            raise SourceNotFound(f"dataset source not found: {path}", path=str(path))
        parts.extend(list_parts(path))
    first = Path(sources[0]) if sources else Path(".")
    base_dir = str(first if first.is_dir() else first.parent)

    mode = LoadMode(mode)
    if mode == LoadMode.MATERIALIZED:
        bad: List[BadLine] = []
        samples = [s for part in parts for s in read_jsonl(part, bad)]
        if not samples:
            raise EmptySource(f"no readable samples in {source}", bad_lines=len(bad))
        logger.info(f"loaded {len(samples)} samples from {len(parts)} part(s), "
                    f"{len(bad)} malformed line(s)")
        return Dataset(parts, mode, samples, bad, base_dir)

    dataset = Dataset(parts, mode, base_dir=base_dir)
    if dataset.schema_prototype is None:
        raise EmptySource(f"no readable samples in {source}")
    return dataset


def write_jsonl(path: Path, samples: Iterable[Sample]) -> Tuple[int, int]:
    """Write samples to ``path`` atomically; returns (sample count, byte count)."""
    path = Path(path)
    count = 0
    size = 0
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                for sample in samples:
                    line = sample.to_json() + b"\n"
                    handle.write(line)
                    count += 1
                    size += len(line)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
    except OSError as e:
        raise TargetUnwritable(f"cannot write {path}: {e}", path=str(path)) from e
    return count, size


def export(dataset: Iterable[Sample], target_path: str | Path,
           drop_placeholders: bool = True) -> ExportReport:
    """Write the dataset as JSONL, optionally omitting fault-tolerance placeholders."""
    dropped = 0

    def kept() -> Iterator[Sample]:
        nonlocal dropped
        for sample in dataset:
            if drop_placeholders and sample.is_placeholder:
                dropped += 1
                continue
            yield sample

    count, size = write_jsonl(Path(target_path), kept())
    logger.info(f"exported {count} samples ({size} bytes) to {target_path}, "
                f"{dropped} placeholder(s) dropped")
    return ExportReport(sample_count=count, byte_count=size, dropped_placeholders=dropped)
