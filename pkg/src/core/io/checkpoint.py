"""Operator-level checkpoint snapshots and resume.

Layout: ``<root>/<recipe_digest>/<op_index>/part-00000.jsonl`` plus ``manifest.json``.
"""
import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, List, Optional

import orjson

from src.core.exceptions import RecipeMismatch, SourceNotFound, TargetUnwritable
from src.core.io.dataset import Dataset, LoadMode, list_parts, load, write_jsonl
from src.core.models.run_state import Checkpoint, RunCounters
from src.core.models.sample import Sample

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def recipe_digest(recipe: Any) -> str:
    """Stable sha256 of a recipe-like JSON-serializable structure."""
    payload = orjson.dumps(recipe, option=orjson.OPT_SORT_KEYS)
    return hashlib.sha256(payload).hexdigest()


def source_fingerprint(source: str | Path) -> List[List[Any]]:
    """Resolved path, size and mtime of every data file of a source; just the path if absent."""
    source = Path(source)
    if not source.exists():
        return [[str(source.resolve()), None, None]]
    fingerprint: List[List[Any]] = []
    for part in list_parts(source):
        stat = part.stat()
        fingerprint.append([str(part.resolve()), stat.st_size, stat.st_mtime_ns])
    return fingerprint


def _file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def checkpoint_dir(root: str | Path, digest: str, op_index: int) -> Path:
    return Path(root) / digest / str(op_index)


def write_checkpoint(root: str | Path, digest: str, op_index: int, samples: Iterable[Sample],
                     counters: RunCounters, plan: Optional[dict] = None) -> Checkpoint:
    """Snapshot the dataset after ``op_index`` together with counters and plan."""
    target = checkpoint_dir(root, digest, op_index)
    part = target / "part-00000.jsonl"
    write_jsonl(part, samples)
    checkpoint = Checkpoint(
        recipe_digest=digest,
        completed_op_index=op_index,
        dataset_snapshot=str(target),
        counters=counters,
        plan=plan or {},
        part_digests=[_file_digest(part)],
    )
    try:
        (target / MANIFEST).write_bytes(
            orjson.dumps(checkpoint.as_dict(), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    except OSError as e:
        raise TargetUnwritable(f"cannot write checkpoint manifest in {target}: {e}") from e
    logger.info(f"checkpoint written after op {op_index} at {target}")
    return checkpoint


def read_checkpoint(path: str | Path) -> Checkpoint:
    """Read a checkpoint from a manifest file, an op directory, or a recipe directory (latest op)."""
    path = Path(path)
    if path.is_dir() and not (path / MANIFEST).exists():
        indices = sorted(int(p.name) for p in path.iterdir()
                         if p.is_dir() and p.name.lstrip("-").isdigit() and (p / MANIFEST).exists())
        if not indices:
            raise SourceNotFound(f"no checkpoint under {path}", path=str(path))
        path = path / str(indices[-1])
    manifest = path / MANIFEST if path.is_dir() else path
    if not manifest.exists():
        raise SourceNotFound(f"checkpoint manifest not found: {manifest}", path=str(manifest))
    return Checkpoint.from_dict(orjson.loads(manifest.read_bytes()))


def latest_checkpoint(root: str | Path, digest: str) -> Optional[Checkpoint]:
    try:
        return read_checkpoint(Path(root) / digest)
    except SourceNotFound:
        return None


@dataclass
class ResumeState:
    checkpoint: Checkpoint
    dataset: Dataset
    next_op_index: int
    counters: RunCounters


def resume(checkpoint: Checkpoint | str | Path, digest: str,
           mode: LoadMode | str = LoadMode.MATERIALIZED) -> ResumeState:
    """
    Restore the state needed to continue a run after its last completed op.

    Raises:
        RecipeMismatch: If the checkpoint belongs to a different recipe
    """
    if not isinstance(checkpoint, Checkpoint):
        checkpoint = read_checkpoint(checkpoint)
    if checkpoint.recipe_digest != digest:
        raise RecipeMismatch(checkpoint.recipe_digest, digest)
    snapshot = Path(checkpoint.dataset_snapshot) / "part-00000.jsonl"
    if not snapshot.exists():
        raise SourceNotFound(f"checkpoint snapshot missing: {snapshot}", path=str(snapshot))
    if snapshot.stat().st_size:
        dataset = load(snapshot, mode)
    else:
        dataset = Dataset.from_samples([])
    logger.info(f"resuming after op {checkpoint.completed_op_index} from {snapshot}")
    return ResumeState(
        checkpoint=checkpoint,
        dataset=dataset,
        next_op_index=checkpoint.completed_op_index + 1,
        counters=RunCounters.from_dict(checkpoint.counters.as_dict()),
    )
