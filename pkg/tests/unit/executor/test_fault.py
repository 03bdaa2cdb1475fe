"""
Purpose: Test suite for batch retries and the skip, fill and abort policies
"""
import pytest

from src.core.exceptions import PipelineAborted, RecipeError, SampleFault
from src.core.executor.fault import BatchStatus, handle_batch_failure, run_with_policy
from src.core.models.plan import Batch
from src.core.models.run_state import FaultMode, FaultPolicy
from src.core.models.sample import PLACEHOLDER_KEY, Sample
from tests.helpers import UpperMapper


class Flaky:
    """An attempt that fails ``failures`` times before returning ``value``."""

    def __init__(self, failures, error=None, value="done"):
        self.failures = failures
        self.error = error or SampleFault("flaky batch")
        self.value = value
        self.calls = 0

    def __call__(self, ctx):
        self.calls += 1
        if self.calls <= self.failures:
            raise self.error
        return self.value


@pytest.fixture
def batch():
    return Batch([Sample(text="a", extra={"id": 1}, key_order=("id", "text")),
                  Sample(meta={PLACEHOLDER_KEY: True})], [4, 5])


class TestRunWithPolicy:
    def setup_method(self):
        self.op = UpperMapper()
        self.delays = []

    def run(self, batch, attempt, ctx, **policy):
        return run_with_policy(batch, self.op, attempt, FaultPolicy(**policy), ctx,
                               sleep=self.delays.append)

    def test_success_needs_no_retry(self, batch, ctx):
        outcome = self.run(batch, Flaky(0), ctx)
        assert (outcome.status, outcome.value, outcome.attempts) == (BatchStatus.OK, "done", 1)
        assert self.delays == []

    def test_retry_with_backoff(self, batch, ctx):
        attempt = Flaky(2)
        outcome = self.run(batch, attempt, ctx, max_retries=3, backoff=(0.1, 0.2))
        assert outcome.status == BatchStatus.RETRIED
        assert outcome.attempts == 3
        assert self.delays == [0.1, 0.2]

    def test_skip_after_retries(self, batch, ctx):
        outcome = self.run(batch, Flaky(5), ctx, max_retries=2, backoff=(0.0,))
        assert outcome.status == BatchStatus.SKIPPED
        assert outcome.attempts == 3
        assert outcome.error == "flaky batch"

    def test_fill_keeps_schema(self, batch, ctx):
        outcome = self.run(batch, Flaky(5), ctx, mode=FaultMode.FILL_EMPTY, max_retries=0)
        placeholders = outcome.placeholders

        assert outcome.status == BatchStatus.FILLED
        assert len(placeholders) == 2
        assert all(p.is_placeholder for p in placeholders)
        assert placeholders[0].extra == {"id": 0}
        assert placeholders[1] is batch.samples[1]

    def test_abort_names_the_batch(self, batch, ctx):
        with pytest.raises(PipelineAborted) as exc:
            self.run(batch, Flaky(5), ctx, mode="abort", max_retries=1)
        assert exc.value.details["ordinals"] == [4, 5]
        assert exc.value.details["op"] == "upper_mapper"
        assert exc.value.exit_code == 3

    def test_fatal_errors_bypass_the_policy(self, batch, ctx):
        attempt = Flaky(1, error=RecipeError("bad config"))
        with pytest.raises(RecipeError):
            self.run(batch, attempt, ctx, max_retries=3)
        assert attempt.calls == 1

    def test_fatal_error_during_retry(self, batch, ctx):
        class Escalating(Flaky):
            def __call__(self, ctx):
                self.calls += 1
                raise SampleFault("first") if self.calls == 1 else PipelineAborted("second")

        with pytest.raises(PipelineAborted):
            self.run(batch, Escalating(0), ctx, max_retries=3, backoff=(0.0,))

    def test_handle_failure_directly(self, batch, ctx):
        outcome = handle_batch_failure(batch, self.op, ValueError("x"), FaultPolicy(max_retries=0),
                                       Flaky(5), ctx, sleep=self.delays.append)
        assert outcome.status == BatchStatus.SKIPPED
        assert outcome.error == "x"
