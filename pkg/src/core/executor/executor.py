"""
Pipeline executor.

Purpose: Run an ExecutionPlan over a dataset. Batches of each step are processed
by a worker pool with a bounded number in flight and merged back in ordinal
order; failures go through the fault policy; a checkpoint is written after
every step.
"""
import itertools
import logging
import shutil
import threading
import time
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Deque, Iterable, Iterator, List, Optional, Sequence, Tuple

from src.core.exceptions import PipelineAborted, RefineryError
from src.core.executor.fault import BatchOutcome, BatchStatus, run_with_policy
from src.core.executor.monitor import Monitor, RunState
from src.core.io.checkpoint import checkpoint_dir, write_checkpoint
from src.core.io.dataset import Dataset, ExportReport, LoadMode, export, iter_batches, load, write_jsonl
from src.core.models.plan import Batch, ExecutionPlan, PlanStep
from src.core.models.run_state import Checkpoint, FaultPolicy, RunCounters
from src.core.models.sample import Sample
from src.core.ops.base import (
    BatchOp,
    Deduplicator,
    GlobalOp,
    Grouper,
    OpContext,
    Operator,
    ScriptOp,
    apply_batch,
)
from src.core.ops.fused import FusedOp
from src.core.ops.runner import finish_global, run_script_stage

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    dataset: Dataset
    counters: RunCounters
    checkpoints: List[Checkpoint] = field(default_factory=list)
    completed_steps: int = 0
    interrupted: bool = False
    export: Optional[ExportReport] = None


class Executor:
    """Runs plan steps in order; one coordinator thread owns counters and checkpoints."""

    def __init__(self, ops: Sequence[Operator], plan: ExecutionPlan,
                 policy: Optional[FaultPolicy] = None, ctx: Optional[OpContext] = None,
                 checkpoint_root: Optional[str | Path] = None, digest: str = "",
                 drop_dir: Optional[str | Path] = None, streaming: bool = False,
                 sleep: Callable[[float], None] = time.sleep) -> None:
        self.ops = list(ops)
        self.plan = plan
        self.policy = policy or FaultPolicy()
        self.ctx = ctx or OpContext()
        self.checkpoint_root = Path(checkpoint_root) if checkpoint_root else None
        self.digest = digest
        self.drop_dir = Path(drop_dir) if drop_dir else None
        self.streaming = streaming and self.checkpoint_root is not None
        self.sleep = sleep
        missing = sorted(set(range(len(self.ops))) - set(plan.op_order()))
        if missing or len(plan.op_order()) != len(self.ops):
            raise ValueError(f"plan does not cover every op exactly once (missing {missing})")

    def step_op(self, step: PlanStep) -> Operator:
        members = [self.ops[i] for i in step.op_indices]
        return members[0] if len(members) == 1 else FusedOp(members, step.batch_size)

    def run(self, dataset: Dataset, start_step: int = 0, counters: Optional[RunCounters] = None,
            stop_after: Optional[int] = None, state: Optional[RunState] = None) -> RunResult:
        """
        Execute steps ``start_step..`` of the plan.

        Raises:
            PipelineAborted: On an abort-mode fault or a failing script; the
                checkpoint before the failing step is in place and counters are
                attached to the error
        """
        state = state or RunState()
        if self.ctx.base_dir is None:
            self.ctx.base_dir = dataset.base_dir
        if counters is None:
            if start_step == 0:
                self._clear_checkpoints()
            counters = RunCounters(processed=len(dataset))
            counters.malformed_lines = len(dataset.bad_lines)
        result = RunResult(dataset=dataset, counters=counters)

        steps = self.plan.steps()
        current = dataset
        for index in range(start_step, len(steps)):
            step = steps[index]
            op = self.step_op(step)
            key = f"{index}:{op.name}"
            state.current_op = key
            before = RunCounters.from_dict(counters.as_dict())
            started = time.perf_counter()
            logger.info(f"step {index}: {op.name} (batch size {step.batch_size}, "
                        f"{step.worker_count} worker(s))")
            try:
                current, checkpoint = self._finish_stage(
                    index, self._run_stage(op, step, current, counters, key, state), counters)
            except PipelineAborted as e:
                counters.add_time(key, time.perf_counter() - started)
                self._abort_checkpoint(index, current, before)
                e.details["counters"] = counters.as_dict()
                logger.error(f"run aborted at step {index} ({op.name}): {e}")
                raise
            elapsed = time.perf_counter() - started
            counters.add_time(key, elapsed)
            with state.lock:
                state.op_time[key] = counters.wall_time[key]
            if checkpoint is not None:
                checkpoint.counters = RunCounters.from_dict(counters.as_dict())
                result.checkpoints.append(checkpoint)
            result.completed_steps = index + 1
            if stop_after is not None and index >= stop_after:
                result.interrupted = index + 1 < len(steps)
                break

        counters.kept = len(current)
        if not counters.conservation_holds():
            logger.warning(f"sample accounting does not balance: {counters.as_dict()}")
        result.dataset = current
        return result

    def _finish_stage(self, index: int, samples: Iterator[Sample],
                      counters: RunCounters) -> Tuple[Dataset, Optional[Checkpoint]]:
        base_dir = self.ctx.base_dir
        if self.checkpoint_root is None:
            return Dataset.from_samples(samples, base_dir=base_dir), None
        if self.streaming:
            checkpoint = write_checkpoint(self.checkpoint_root, self.digest, index, samples,
                                          counters, self.plan.as_dict())
            part = Path(checkpoint.dataset_snapshot) / "part-00000.jsonl"
            if part.stat().st_size == 0:
                return Dataset.from_samples([], base_dir=base_dir), checkpoint
            dataset = load(part, LoadMode.STREAMING)
            dataset.base_dir = base_dir
            return dataset, checkpoint
        materialized = list(samples)
        checkpoint = write_checkpoint(self.checkpoint_root, self.digest, index, materialized,
                                      counters, self.plan.as_dict())
        return Dataset.from_samples(materialized, base_dir=base_dir), checkpoint

    def _clear_checkpoints(self) -> None:
        """A fresh run owns its digest directory; step indices left by an earlier run are stale."""
        if self.checkpoint_root is None:
            return
        stale = self.checkpoint_root / self.digest
        if stale.exists():
            logger.info(f"removing checkpoints of an earlier run under {stale}")
            shutil.rmtree(stale)

    def _abort_checkpoint(self, index: int, current: Dataset, before: RunCounters) -> None:
        """Make sure the state before the failing step is checkpointed so a resume retries it."""
        if self.checkpoint_root is None:
            return
        if checkpoint_dir(self.checkpoint_root, self.digest, index - 1).exists():
            return
        write_checkpoint(self.checkpoint_root, self.digest, index - 1, current, before,
                         self.plan.as_dict())

    def _run_stage(self, op: Operator, step: PlanStep, dataset: Dataset, counters: RunCounters,
                   key: str, state: RunState) -> Iterator[Sample]:
        if isinstance(op, BatchOp):
            return self._run_batched(op, step, dataset, counters, key, state)
        if isinstance(op, GlobalOp):
            return iter(self._run_global(op, step, dataset, counters, key, state))
        if isinstance(op, ScriptOp):
            return iter(self._run_script(op, dataset, counters, key))
        raise TypeError(f"cannot execute operator of type {type(op).__name__}")

    def _map_batches(self, step: PlanStep, dataset: Iterable[Sample], op: Operator,
                     attempt_for: Callable[[Batch], Callable[[OpContext], object]],
                     state: RunState) -> Iterator[Tuple[Batch, BatchOutcome]]:
        """Submit batches to the pool, at most 2 x workers in flight; yield results in order."""
        workers = max(1, step.worker_count)
        local = threading.local()
        ids = itertools.count()

        def init() -> None:
            local.worker_id = next(ids)

        def task(batch: Batch) -> BatchOutcome:
            ctx = self.ctx.for_batch(getattr(local, "worker_id", 0))
            return run_with_policy(batch, op, attempt_for(batch), self.policy, ctx, self.sleep)

        pending: Deque[Tuple[Batch, Future]] = deque()
        with ThreadPoolExecutor(max_workers=workers, initializer=init) as pool:
            for batch in iter_batches(dataset, step.batch_size):
                pending.append((batch, pool.submit(task, batch)))
                if len(pending) >= 2 * workers:
                    done, future = pending.popleft()
                    outcome = future.result()
                    state.advance(done.size, len(pending))
                    yield done, outcome
            while pending:
                done, future = pending.popleft()
                outcome = future.result()
                state.advance(done.size, len(pending))
                yield done, outcome

    @staticmethod
    def _count_failure(batch: Batch, outcome: BatchOutcome, counters: RunCounters,
                       key: str) -> List[Sample]:
        """Apply counters of a non-OK outcome; returns what replaces the batch."""
        if outcome.attempts > 1:
            counters.retried_batches += 1
        if outcome.status == BatchStatus.SKIPPED:
            counters.skipped_batches += 1
            counters.lost_in_skipped_batches += batch.size
            counters.skipped_ordinals.setdefault(key, []).extend(batch.origin_ordinals)
            return []
        placeholders = outcome.placeholders or []
        counters.placeholder_samples += sum(1 for s in batch.samples if not s.is_placeholder)
        return placeholders

    def _run_batched(self, op: BatchOp, step: PlanStep, dataset: Dataset, counters: RunCounters,
                     key: str, state: RunState) -> Iterator[Sample]:
        drops: List[Sample] = []

        def attempt_for(batch: Batch) -> Callable[[OpContext], object]:
            return lambda ctx: apply_batch(op, batch, ctx)

        for batch, outcome in self._map_batches(step, dataset, op, attempt_for, state):
            if outcome.status in (BatchStatus.OK, BatchStatus.RETRIED):
                if outcome.attempts > 1:
                    counters.retried_batches += 1
                out = outcome.value
                if out.dropped:
                    counters.drop(key, len(out.dropped))
                    drops.extend(out.dropped)
                counters.samples_added += out.added
                yield from out.samples
            else:
                yield from self._count_failure(batch, outcome, counters, key)
        self._write_drops(key, drops)

    def _run_global(self, op: GlobalOp, step: PlanStep, dataset: Dataset, counters: RunCounters,
                    key: str, state: RunState) -> List[Sample]:
        items: List[Tuple[int, Sample]] = []
        keys = {}

        def attempt_for(batch: Batch) -> Callable[[OpContext], object]:
            real = [s for s in batch.samples if not s.is_placeholder]
            return lambda ctx: op.compute_keys(real, ctx)

        for batch, outcome in self._map_batches(step, dataset, op, attempt_for, state):
            if outcome.status in (BatchStatus.OK, BatchStatus.RETRIED):
                if outcome.attempts > 1:
                    counters.retried_batches += 1
                real = [o for o, s in batch if not s.is_placeholder]
                keys.update(zip(real, outcome.value))
                items.extend(batch)
            else:
                replaced = self._count_failure(batch, outcome, counters, key)
                items.extend(zip(batch.origin_ordinals, replaced))

        out = finish_global(op, items, keys, self.ctx)
        removed = len(keys) - sum(1 for s in out if not s.is_placeholder)
        if isinstance(op, Deduplicator):
            counters.dedup_removed += removed
        elif isinstance(op, Grouper):
            counters.samples_merged += removed
        elif removed:
            counters.drop(key, removed)
        logger.info(f"{op.name}: {len(keys)} in, {len(keys) - removed} out")
        return out

    def _run_script(self, op: ScriptOp, dataset: Dataset, counters: RunCounters,
                    key: str) -> List[Sample]:
        count_in = 0

        def counted() -> Iterator[Sample]:
            nonlocal count_in
            for sample in dataset:
                count_in += 1
                yield sample

        try:
            out = run_script_stage(op, counted(), self.ctx)
        except RefineryError:
            raise
        except Exception as e:
            raise PipelineAborted(f"{op.name} failed: {e}", op=op.name) from e
        diff = len(out) - count_in
        if diff > 0:
            counters.samples_added += diff
        elif diff < 0:
            counters.drop(key, -diff)
        return out

    def _write_drops(self, key: str, drops: List[Sample]) -> None:
        if self.drop_dir is None or not drops:
            return
        index, name = key.split(":", 1)
        path = self.drop_dir / f"{index}_{name}.jsonl"
        write_jsonl(path, drops)
        logger.info(f"{len(drops)} dropped sample(s) of {name} logged to {path}")


def run_pipeline(plan: ExecutionPlan, dataset: Dataset, policy: Optional[FaultPolicy],
                 ops: Sequence[Operator], ctx: Optional[OpContext] = None,
                 checkpoint_root: Optional[str | Path] = None, digest: str = "",
                 export_path: Optional[str | Path] = None, drop_dir: Optional[str | Path] = None,
                 monitor_path: Optional[str | Path] = None, start_step: int = 0,
                 counters: Optional[RunCounters] = None, stop_after: Optional[int] = None,
                 streaming: bool = False, keep_placeholders: bool = False) -> RunResult:
    """
    Execute a plan, optionally monitored, and export the result when the run completes.

    Placeholders left by ``fill_empty`` are dropped from the export unless
    ``keep_placeholders`` is set.
    """
    ctx = ctx or OpContext()
    executor = Executor(ops, plan, policy, ctx, checkpoint_root, digest, drop_dir, streaming)
    state = RunState()
    monitor = Monitor(monitor_path, state, ctx.config.monitor_interval) if monitor_path else None
    if monitor:
        monitor.start()
    try:
        result = executor.run(dataset, start_step, counters, stop_after, state)
    finally:
        if monitor:
            monitor.stop()
    if export_path is not None and not result.interrupted:
        result.export = export(result.dataset, export_path,
                               drop_placeholders=not keep_placeholders)
    logger.info(f"run finished: {result.counters.kept} kept of {result.counters.processed} "
                f"processed in {sum(result.counters.wall_time.values()):.2f}s")
    return result
