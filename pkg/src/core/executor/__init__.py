from src.core.executor.executor import Executor, RunResult, run_pipeline
from src.core.executor.fault import BatchOutcome, BatchStatus, handle_batch_failure
from src.core.executor.monitor import Monitor, RunState

__all__ = [
    "BatchOutcome", "BatchStatus", "Executor", "Monitor", "RunResult", "RunState",
    "handle_batch_failure", "run_pipeline",
]
