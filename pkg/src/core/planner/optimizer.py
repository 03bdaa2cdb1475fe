"""
Plan optimizer.

Purpose: Split a recipe into groups of mutually commutative filters separated by
barrier operators, fuse filters that read the same inputs, and order each group
to minimize the estimated total time sum(N_j / v_j), where N shrinks by each
unit's probed selectivity.
"""
import logging
from dataclasses import dataclass
from itertools import permutations
from typing import List, Optional, Sequence, Tuple

from src.core.config import EngineConfig
from src.core.exceptions import NonPositiveSpeed
from src.core.models.plan import ExecutionPlan, OpDescriptor, OpType, PlanStep, ProbeReport, Resources
from src.core.planner.resources import allocate_workers, per_sample_memory, select_batch_size

logger = logging.getLogger(__name__)

EXACT_GROUP_LIMIT = 8

Unit = List[int]


@dataclass
class UnitEstimate:
    op_indices: Unit
    speed: Optional[float]
    selectivity: float

    @property
    def failed(self) -> bool:
        return self.speed is None


def is_fusible(op: OpDescriptor) -> bool:
    return op.op_type == OpType.FILTER and op.commutative_filter and op.supports_batch


def detect_fusible_groups(ops: Sequence[OpDescriptor]) -> List[List[Unit]]:
    """
    Maximal runs of commutative filters form groups; every other op is its own group.

    Within a group, filters sharing an input tag (e.g. ``images``) are merged into
    one unit to be executed as a fused op.
    """
    groups: List[List[Unit]] = []
    run: List[int] = []

    def close_run() -> None:
        if run:
            groups.append(_fuse_shared(run, ops))
            run.clear()

    for index, op in enumerate(ops):
        if is_fusible(op):
            run.append(index)
        else:
            close_run()
            groups.append([[index]])
    close_run()
    return groups


def _fuse_shared(indices: List[int], ops: Sequence[OpDescriptor]) -> List[Unit]:
    units: List[Unit] = []
    tags: List[set] = []
    for index in indices:
        own = set(ops[index].shared_inputs)
        hits = [u for u, t in enumerate(tags) if own & t]
        if not hits:
            units.append([index])
            tags.append(own)
            continue
        target = hits[0]
        for other in reversed(hits[1:]):
            units[target].extend(units.pop(other))
            tags[target] |= tags.pop(other)
        units[target].append(index)
        tags[target] |= own
    return [sorted(unit) for unit in sorted(units, key=min)]


def estimate_fused_speed(speeds: Sequence[float]) -> float:
    """Speed of running members one after another on the same samples: 1 / sum(1 / v_i)."""
    if not speeds or any(v is None or v <= 0 for v in speeds):
        raise NonPositiveSpeed(f"fused speed needs positive member speeds, got {list(speeds)}")
    return 1.0 / sum(1.0 / v for v in speeds)


def estimate_unit(unit: Unit, probe: ProbeReport) -> UnitEstimate:
    members = [probe.for_op(i) for i in unit]
    if any(not m.completed for m in members):
        return UnitEstimate(unit, None, 1.0)
    selectivity = 1.0
    for m in members:
        selectivity *= m.selectivity
    return UnitEstimate(unit, estimate_fused_speed([m.speed for m in members]), selectivity)


def reorder_group(group: Sequence[UnitEstimate]) -> List[UnitEstimate]:
    """Speed descending; ties and failed probes keep their original position order, failures last."""
    ranked = sorted(enumerate(group), key=lambda item: (
        item[1].failed, -(item[1].speed or 0.0), item[0]))
    return [unit for _, unit in ranked]


def order_cost(order: Sequence[UnitEstimate], n: float) -> float:
    """sum(N_j / v_j) with N shrinking by each unit's selectivity."""
    total = 0.0
    for unit in order:
        if unit.failed:
            continue
        total += n / unit.speed
        n *= unit.selectivity
    return total


def best_order(group: Sequence[UnitEstimate], n: float,
               speed_only: bool = False) -> List[UnitEstimate]:
    """
    Exact optimum for small groups, else the speed heuristic if it beats the original order.

    With ``speed_only`` the group is simply sorted by speed.
    """
    if speed_only:
        return reorder_group(group)
    completed = [u for u in group if not u.failed]
    failed = [u for u in group if u.failed]
    if len(completed) <= EXACT_GROUP_LIMIT:
        best, best_cost = list(completed), order_cost(completed, n)
        for candidate in permutations(completed):
            cost = order_cost(candidate, n)
            if cost < best_cost:
                best, best_cost = list(candidate), cost
    else:
        heuristic = reorder_group(completed)
        best = heuristic if order_cost(heuristic, n) < order_cost(
            completed, n) else list(completed)
    return best + failed


def _flow(order: Sequence[UnitEstimate], n: float) -> Tuple[float, float]:
    """(time, surviving N) for an order including units outside any group."""
    total = 0.0
    for unit in order:
        if not unit.failed:
            total += n / unit.speed
        n *= unit.selectivity
    return total, n


def plan(ops: Sequence[OpDescriptor], probe: ProbeReport, resources: Resources,
         dataset_size: Optional[int] = None, speed_only: bool = False, optimize: bool = True,
         np_cap: Optional[int] = None, config: Optional[EngineConfig] = None) -> ExecutionPlan:
    """
    Build the execution plan: fusion and reordering per group, then batch sizes and workers.

    With ``optimize`` off every op is its own step in recipe order.
    """
    config = config or EngineConfig.from_env()
    n = float(dataset_size if dataset_size is not None else probe.probe_sample_size)
    if optimize:
        raw_groups = detect_fusible_groups(ops)
    else:
        raw_groups = [[[i]] for i in range(len(ops))]

    groups: List[List[PlanStep]] = []
    raw_time = plan_time = 0.0
    n_raw = n_plan = n
    for raw_group in raw_groups:
        estimates = [estimate_unit(unit, probe) for unit in raw_group]
        order = best_order(estimates, n_plan, speed_only) if optimize else estimates
        elapsed, n_raw = _flow(estimates, n_raw)
        raw_time += elapsed
        elapsed, n_plan = _flow(order, n_plan)
        plan_time += elapsed
        groups.append([_step(unit, ops, probe, resources, config, np_cap) for unit in order])

    execution_plan = ExecutionPlan(
        groups=groups,
        estimated_total_time=plan_time,
        raw_estimated_time=raw_time,
        seed=probe.seed,
        speed_only=speed_only,
        optimized=optimize,
    )
    logger.info(f"plan: {len(execution_plan.steps())} step(s) for {len(ops)} op(s), estimated "
                f"{plan_time:.4f}s vs {raw_time:.4f}s in recipe order")
    return execution_plan


def _step(unit: UnitEstimate, ops: Sequence[OpDescriptor], probe: ProbeReport,
          resources: Resources, config: EngineConfig, np_cap: Optional[int]) -> PlanStep:
    members = [ops[i] for i in unit.op_indices]
    batch_size = min(
        select_batch_size(op, probe.for_op(i), resources.mem_bytes, config.mem_utilization,
                          config.default_batch_size)
        for i, op in zip(unit.op_indices, members))
    workers = min(
        allocate_workers(op, resources, config.mem_utilization,
                         mem_required=op.mem_required or int(
                             per_sample_memory(op, probe.for_op(i)) * batch_size),
                         np_cap=np_cap)
        for i, op in zip(unit.op_indices, members))
    return PlanStep(op_indices=list(unit.op_indices), batch_size=batch_size,
                    worker_count=workers, speed=unit.speed, selectivity=unit.selectivity)
