"""The unified run template: dispatch one operator over a whole dataset."""
import logging
from typing import Any, Dict, Iterable, List, Optional, Tuple

from src.core.io.dataset import Dataset, iter_batches
from src.core.models.sample import Sample
from src.core.ops.base import (
    BatchOp,
    GlobalOp,
    Grouper,
    OpContext,
    Operator,
    ScriptOp,
    apply_batch,
)

logger = logging.getLogger(__name__)


def finish_global(op: GlobalOp, items: List[Tuple[int, Sample]], keys: Dict[int, Any],
                  ctx: OpContext) -> List[Sample]:
    """
    Second phase of a global operator over keys extracted batch by batch.

    Args:
        items: (ordinal, sample) pairs of the whole dataset, in order
        keys: extracted key per ordinal of every non-placeholder sample

    Returns:
        Output samples in dataset order; placeholders are kept
    """
    real = [(ordinal, sample) for ordinal, sample in items if ordinal in keys]
    if isinstance(op, Grouper):
        grouped = op.group([(sample, keys[ordinal]) for ordinal, sample in real], ctx)
        return grouped + [sample for _, sample in items if sample.is_placeholder]
    chosen = op.select([(ordinal, keys[ordinal]) for ordinal, _ in real], ctx)
    return [sample for ordinal, sample in items if sample.is_placeholder or ordinal in chosen]


def run_script_stage(op: ScriptOp, samples: Iterable[Sample], ctx: OpContext) -> List[Sample]:
    placeholders: List[Sample] = []

    def real() -> Iterable[Sample]:
        for sample in samples:
            if sample.is_placeholder:
                placeholders.append(sample)
            else:
                yield sample

    outputs = op.run_stream(real(), ctx)
    return outputs + placeholders


def run(op: Operator, dataset: Iterable[Sample], ctx: Optional[OpContext] = None) -> Dataset:
    """
    Run one operator over a dataset sequentially, in a single worker.

    Filters compute stats before deciding; dropped samples (with their stats)
    are appended to ``ctx.drop_log`` when one is provided.
    """
    ctx = ctx or OpContext()
    base_dir = getattr(dataset, "base_dir", None) or ctx.base_dir
    if base_dir and not ctx.base_dir:
        ctx.base_dir = base_dir

    if isinstance(op, BatchOp):
        batch_size = op.batch_size or ctx.config.default_batch_size
        out: List[Sample] = []
        for batch in iter_batches(dataset, batch_size):
            result = apply_batch(op, batch, ctx.for_batch())
            out.extend(result.samples)
            if ctx.drop_log is not None:
                ctx.drop_log.extend(result.dropped)
        return Dataset.from_samples(out, base_dir=base_dir)

    if isinstance(op, GlobalOp):
        items = list(enumerate(dataset))
        keys: Dict[int, Any] = {}
        batch_size = op.batch_size or ctx.config.default_batch_size
        for batch in iter_batches((s for _, s in items), batch_size):
            real = [(o, s) for o, s in batch if not s.is_placeholder]
            extracted = op.compute_keys([s for _, s in real], ctx.for_batch()) if real else []
            keys.update({o: k for (o, _), k in zip(real, extracted)})
        return Dataset.from_samples(finish_global(op, items, keys, ctx), base_dir=base_dir)

    if isinstance(op, ScriptOp):
        return Dataset.from_samples(run_script_stage(op, dataset, ctx), base_dir=base_dir)

    raise TypeError(f"cannot run operator of type {type(op).__name__}")
