"""Error hierarchy shared by every engine component.

Each error carries a machine-readable ``code`` and the process ``exit_code``
the CLI should return when it escapes a command.
"""
from typing import Any, Dict, List, Optional, Sequence


class RefineryError(Exception):
    """Base class for all engine errors."""

    code = "REFINERY_ERROR"
    exit_code = 1

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def one_line(self) -> str:
        """Render as the single machine-grepable line printed by the CLI."""
        return f"ERROR {self.code}: {self.message}"


# Sample-level faults: routed to the fault policy instead of aborting.

class SampleFault(RefineryError):
    """A fault tied to one sample: ``position`` in the list handed to the op, then its ordinal."""

    code = "SAMPLE_FAULT"
    position: Optional[int] = None
    ordinal: Optional[int] = None

    def locate(self, ordinals: Sequence[int]) -> None:
        """Translate ``position`` into the ordinal of the sample in its batch."""
        if self.ordinal is not None or self.position is None or self.position >= len(ordinals):
            return
        self.ordinal = ordinals[self.position]
        self.details["ordinal"] = self.ordinal
        self.message = f"{self.message} (sample {self.ordinal})"
        self.args = (self.message,)


class TokenMismatch(SampleFault):
    code = "TOKEN_MISMATCH"

    def __init__(self, modality: str, tokens: int, paths: int) -> None:
        super().__init__(
            f"{modality} token count {tokens} does not match {paths} {modality} paths",
            modality=modality, tokens=tokens, paths=paths,
        )
        self.modality = modality
        self.tokens = tokens
        self.paths = paths


class UnreadableMedia(SampleFault):
    code = "UNREADABLE_MEDIA"

    def __init__(self, path: str, reason: str, ordinal: Optional[int] = None) -> None:
        where = f" (sample {ordinal})" if ordinal is not None else ""
        super().__init__(f"cannot read media {path!r}{where}: {reason}",
                         path=path, reason=reason, ordinal=ordinal)
        self.path = path
        self.reason = reason
        self.ordinal = ordinal


class MissingGroupKey(SampleFault):
    code = "MISSING_GROUP_KEY"


class SampleSchemaViolation(SampleFault):
    code = "SAMPLE_SCHEMA_VIOLATION"


# Configuration errors: reported before any data is touched.

class ConfigError(RefineryError):
    code = "CONFIG_ERROR"
    exit_code = 2


class UnknownOp(ConfigError):
    code = "UNKNOWN_OP"

    def __init__(self, name: str) -> None:
        super().__init__(f"unknown operator {name!r}", name=name)
        self.name = name


class ParamValidation(ConfigError):
    code = "PARAM_VALIDATION"

    def __init__(self, op_name: str, problems: List[str]) -> None:
        super().__init__(f"invalid params for {op_name!r}: " + "; ".join(problems),
                         op_name=op_name, problems=problems)
        self.op_name = op_name
        self.problems = problems


class RecipeError(ConfigError):
    code = "RECIPE_ERROR"


class NonBatchableChild(ConfigError):
    code = "NON_BATCHABLE_CHILD"


class NonPositiveSpeed(ConfigError):
    code = "NON_POSITIVE_SPEED"


class MissingStat(ConfigError):
    code = "MISSING_STAT"


class ValidationFailed(ConfigError):
    code = "VALIDATION_FAILED"


# I/O errors.

class SourceNotFound(RefineryError):
    code = "SOURCE_NOT_FOUND"
    exit_code = 2


class EmptySource(RefineryError):
    code = "EMPTY_SOURCE"
    exit_code = 2


class TargetUnwritable(RefineryError):
    code = "TARGET_UNWRITABLE"


# Run-level failures.

class PipelineAborted(RefineryError):
    code = "PIPELINE_ABORTED"
    exit_code = 3


class ScriptNonZeroExit(PipelineAborted):
    code = "SCRIPT_NONZERO_EXIT"

    def __init__(self, command: str, returncode: int, stderr: str) -> None:
        super().__init__(
            f"script {command!r} exited with {returncode}: {stderr.strip()[:500]}",
            returncode=returncode, stderr=stderr,
        )
        self.returncode = returncode
        self.stderr = stderr


class ScriptTimedOut(PipelineAborted):
    code = "SCRIPT_TIMED_OUT"

    def __init__(self, command: str, timeout: float) -> None:
        super().__init__(f"script {command!r} did not finish within {timeout}s; killed",
                         timeout=timeout)
        self.timeout = timeout


class SchemaViolation(PipelineAborted):
    code = "SCHEMA_VIOLATION"


class RecipeMismatch(RefineryError):
    code = "RECIPE_MISMATCH"
    exit_code = 4

    def __init__(self, expected: str, actual: str) -> None:
        super().__init__(
            f"checkpoint was written for recipe {expected[:12]}, running recipe is {actual[:12]}",
            expected=expected, actual=actual,
        )


def is_fatal(error: BaseException) -> bool:
    """Whether an error raised inside an operator must bypass the fault policy."""
    return isinstance(error, (ConfigError, PipelineAborted, RecipeMismatch))


def describe(error: BaseException) -> Dict[str, Any]:
    code = error.code if isinstance(error, RefineryError) else type(error).__name__
    return {"code": code, "message": str(error)}
