"""Probe operator speed, memory and selectivity on a small sample of the dataset."""
import logging
import random
import time
import tracemalloc
from typing import Iterable, List, Optional, Sequence

from src.core.exceptions import EmptySource
from src.core.io.dataset import Dataset
from src.core.models.plan import OpProbe, ProbeReport
from src.core.models.sample import Sample
from src.core.ops.base import OpContext, Operator
from src.core.ops.runner import run

logger = logging.getLogger(__name__)

PROBE_SIZE = 1000


def probe_sample(samples: Sequence[Sample], size: int, seed: int) -> List[Sample]:
    """A seeded random subset of ``size`` samples, kept in dataset order."""
    picks = sorted(random.Random(seed).sample(range(len(samples)), size))
    return [samples[i] for i in picks]


def probe_op(op_index: int, op: Operator, samples: List[Sample], ctx: OpContext) -> OpProbe:
    tracing = tracemalloc.is_tracing()
    if not tracing:
        tracemalloc.start()
    tracemalloc.reset_peak()
    baseline = tracemalloc.get_traced_memory()[0]
    started = time.perf_counter()
    try:
        out = run(op, Dataset.from_samples(samples, base_dir=ctx.base_dir), ctx)
        elapsed = max(time.perf_counter() - started, 1e-9)
        peak = max(0, tracemalloc.get_traced_memory()[1] - baseline)
        return OpProbe(op_index, op.name, speed=len(samples) / elapsed, peak_mem=peak,
                       probe_sample_size=len(samples), wall_time=elapsed,
                       selectivity=len(out) / len(samples))
    except Exception as e:
        elapsed = time.perf_counter() - started
        logger.warning(f"probe of {op.name} (op {op_index}) failed: {e}")
        return OpProbe(op_index, op.name, speed=None,
                       peak_mem=op.descriptor.mem_required, probe_sample_size=len(samples),
                       wall_time=elapsed, error=f"{type(e).__name__}: {e}")
    finally:
        if not tracing:
            tracemalloc.stop()


def probe_small_batch(dataset: Iterable[Sample], ops: Sequence[Operator],
                      seed: Optional[int] = None, probe_size: int = PROBE_SIZE,
                      ctx: Optional[OpContext] = None) -> ProbeReport:
    """
    Run every op on the same seeded sample of min(probe_size, n) samples.

    Ops run one after another so timings do not contend. A failing op is
    recorded with its error and no speed.

    Raises:
        EmptySource: If the dataset has no samples
    """
    ctx = ctx or OpContext(base_dir=getattr(dataset, "base_dir", None))
    seed = ctx.seed if seed is None else seed
    samples = [s for s in dataset if not s.is_placeholder]
    if not samples:
        raise EmptySource("cannot probe an empty dataset")
    size = min(probe_size, len(samples))
    subset = probe_sample(samples, size, seed)
    logger.info(f"probing {len(ops)} op(s) on {size} of {len(samples)} samples (seed {seed})")
    probes = [probe_op(i, op, subset, ctx) for i, op in enumerate(ops)]
    return ProbeReport(probes=probes, probe_sample_size=size, seed=seed)
