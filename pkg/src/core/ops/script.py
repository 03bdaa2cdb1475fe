"""ScriptOp: JSONL over stdin/stdout to an external executable."""
import logging
import shlex
import shutil
import subprocess
from typing import Iterable, List, Optional

from pydantic import field_validator

from src.core.exceptions import RefineryError, SchemaViolation, ScriptNonZeroExit, ScriptTimedOut
from src.core.io.dataset import Dataset
from src.core.models.sample import Sample
from src.core.ops.base import OpContext, OpParams, ScriptOp
from src.core.ops.registry import OPERATORS

logger = logging.getLogger(__name__)


def _argv(command: str | List[str]) -> List[str]:
    return shlex.split(command) if isinstance(command, str) else list(command)


@OPERATORS.register("script_mapper")
class ScriptMapper(ScriptOp):
    """Runs a user script over the whole dataset; failures abort the run."""

    class Params(OpParams):
        command: str | List[str]
        timeout: Optional[float] = None

        @field_validator("command")
        @classmethod
        def executable_exists(cls, value: str | List[str]) -> str | List[str]:
            argv = _argv(value)
            if not argv:
                raise ValueError("command is empty")
            if shutil.which(argv[0]) is None:
                raise ValueError(f"script {argv[0]!r} not found or not executable")
            return value

    def run_stream(self, samples: Iterable[Sample], ctx: OpContext) -> List[Sample]:
        """
        Feed every sample to the script and parse what it prints.

        Raises:
            ScriptTimedOut: The script outlived ``timeout``; it is killed first
            ScriptNonZeroExit: The script failed; stderr is attached
            SchemaViolation: A printed line is not a valid sample
        """
        argv = _argv(self.params.command)
        logger.info(f"running script {argv}")
        payload = b"".join(sample.to_json() + b"\n" for sample in samples)
        proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                stderr=subprocess.PIPE)
        try:
            stdout, stderr = proc.communicate(payload, timeout=self.params.timeout)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.communicate()
            logger.error(f"script {argv[0]!r} timed out after {self.params.timeout}s")
            raise ScriptTimedOut(" ".join(argv), self.params.timeout) from None

        if proc.returncode != 0:
            raise ScriptNonZeroExit(" ".join(argv), proc.returncode,
                                    stderr.decode("utf-8", errors="replace"))
        outputs: List[Sample] = []
        for line_no, line in enumerate(stdout.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                outputs.append(Sample.from_json(line))
            except (ValueError, RefineryError) as e:
                raise SchemaViolation(
                    f"script {argv[0]!r} produced an invalid sample at line {line_no}: {e}") from e
        return outputs


def run_script(op: ScriptOp, dataset: Iterable[Sample], ctx: Optional[OpContext] = None) -> Dataset:
    return Dataset.from_samples(op.run_stream(dataset, ctx or OpContext()))
