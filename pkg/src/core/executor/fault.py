"""Batch-level fault handling: retries with backoff, then skip, fill or abort."""
import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, List, Optional

from src.core.exceptions import PipelineAborted, describe, is_fatal
from src.core.models.plan import Batch
from src.core.models.run_state import FaultMode, FaultPolicy
from src.core.models.sample import Sample
from src.core.ops.base import OpContext, Operator
from src.core.schema.validation import make_empty_sample

logger = logging.getLogger(__name__)

Attempt = Callable[[OpContext], Any]


class BatchStatus(str, Enum):
    OK = "ok"
    RETRIED = "retried"
    SKIPPED = "skipped"
    FILLED = "filled"


@dataclass
class BatchOutcome:
    status: BatchStatus
    value: Any = None
    placeholders: Optional[List[Sample]] = None
    error: Optional[str] = None
    attempts: int = 1


def fill_placeholders(batch: Batch) -> List[Sample]:
    return [s if s.is_placeholder else make_empty_sample(s) for s in batch.samples]


def handle_batch_failure(batch: Batch, op: Operator, error: BaseException, policy: FaultPolicy,
                         attempt: Attempt, ctx: OpContext,
                         sleep: Callable[[float], None] = time.sleep) -> BatchOutcome:
    """
    Retry a failed batch, then apply the policy mode.

    Raises:
        PipelineAborted: In abort mode once retries are exhausted
    """
    last = error
    for retry in range(1, policy.max_retries + 1):
        sleep(policy.delay(retry))
        try:
            value = attempt(ctx.for_batch())
            logger.warning(f"{op.name}: batch {batch.origin_ordinals[0]}..{batch.origin_ordinals[-1]} "
                           f"succeeded on retry {retry}")
            return BatchOutcome(BatchStatus.RETRIED, value=value, attempts=retry + 1)
        except Exception as e:
            if is_fatal(e):
                raise
            last = e

    info = describe(last)
    span = f"{batch.origin_ordinals[0]}..{batch.origin_ordinals[-1]}" if batch.size else "empty"
    if policy.mode == FaultMode.ABORT:
        logger.error(f"{op.name}: batch {span} failed after {policy.max_retries} retries, "
                     f"aborting: {info['message']}")
        raise PipelineAborted(f"{op.name} failed on samples {span}: {info['code']}: "
                              f"{info['message']}", op=op.name,
                              ordinals=list(batch.origin_ordinals)) from last
    if policy.mode == FaultMode.FILL_EMPTY:
        logger.warning(f"{op.name}: batch {span} filled with placeholders: {info['message']}")
        return BatchOutcome(BatchStatus.FILLED, placeholders=fill_placeholders(batch),
                            error=info["message"], attempts=policy.max_retries + 1)
    logger.warning(f"{op.name}: batch {span} skipped ({batch.size} samples, ordinals "
                   f"{list(batch.origin_ordinals)}): {info['message']}")
    return BatchOutcome(BatchStatus.SKIPPED, error=info["message"],
                        attempts=policy.max_retries + 1)


def run_with_policy(batch: Batch, op: Operator, attempt: Attempt, policy: FaultPolicy,
                    ctx: OpContext, sleep: Callable[[float], None] = time.sleep) -> BatchOutcome:
    """Run ``attempt`` on a batch; fatal errors propagate, anything else goes to the policy."""
    try:
        return BatchOutcome(BatchStatus.OK, value=attempt(ctx))
    except Exception as e:
        if is_fatal(e):
            raise
        return handle_batch_failure(batch, op, e, policy, attempt, ctx, sleep)
