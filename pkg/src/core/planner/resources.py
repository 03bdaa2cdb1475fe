"""Batch sizing and worker allocation against detected machine resources."""
import logging
import math
from typing import Optional

import psutil

from src.core.config import EngineConfig
from src.core.models.plan import OpDescriptor, OpProbe, Resources

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 1000
DEFAULT_UTILIZATION = 0.9


def detect_resources(config: Optional[EngineConfig] = None) -> Resources:
    """Logical CPUs and currently available memory, plus configured accelerator slots."""
    config = config or EngineConfig.from_env()
    return Resources(
        cpu_count=psutil.cpu_count(logical=True) or 1,
        mem_bytes=int(psutil.virtual_memory().available),
        accel_slots=list(config.accel_slots),
    )


def per_sample_memory(op: OpDescriptor, probe: Optional[OpProbe]) -> float:
    """Probed peak memory per sample, else the declared requirement."""
    if probe is not None and probe.completed and probe.peak_mem > 0 and probe.probe_sample_size:
        return probe.peak_mem / probe.probe_sample_size
    return float(op.mem_required)


def select_batch_size(op: OpDescriptor, probe: Optional[OpProbe] = None,
                      mem_bytes: Optional[int] = None,
                      utilization: float = DEFAULT_UTILIZATION,
                      default: int = DEFAULT_BATCH_SIZE) -> int:
    """
    Declared batch size or the default, clamped so a batch fits the memory budget.

    Args:
        mem_bytes: Memory available to one batch; unbounded when None
    """
    batch_size = op.batch_size or default
    per_sample = per_sample_memory(op, probe)
    if mem_bytes is not None and per_sample > 0:
        cap = math.floor(mem_bytes * utilization / per_sample)
        if cap < batch_size:
            logger.info(f"{op.name}: batch size clamped from {batch_size} to {max(1, cap)} "
                        f"by memory ({per_sample:.0f} B/sample)")
        batch_size = min(batch_size, cap)
    return max(1, batch_size)


def allocate_workers(op: OpDescriptor, resources: Resources,
                     utilization: float = DEFAULT_UTILIZATION,
                     mem_required: Optional[int] = None,
                     np_cap: Optional[int] = None) -> int:
    """
    Worker count bounded by CPUs and by how many op instances fit in memory.

    Accelerator-tagged ops are packed per slot; never returns less than 1.
    """
    mem = op.mem_required if mem_required is None else mem_required
    cpu_cap = resources.cpu_count
    if op.cpu_required > 1:
        cpu_cap = max(1, math.floor(resources.cpu_count / op.cpu_required))

    if mem <= 0:
        workers = cpu_cap
    elif op.accelerator and resources.accel_slots:
        per_slot = [math.floor(slot * utilization / mem) for slot in resources.accel_slots]
        workers = min(cpu_cap, sum(per_slot))
    else:
        workers = min(cpu_cap, math.floor(resources.mem_bytes * utilization / mem))

    if np_cap is not None:
        workers = min(workers, np_cap)
    if workers < 1:
        logger.warning(f"{op.name}: needs {mem} bytes per worker, more than the "
                       f"{utilization:.0%} budget allows; running with 1 worker")
        return 1
    return workers
