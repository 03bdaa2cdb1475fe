"""Dataset validation against a processing goal, and schema-compatible empty samples."""
import logging
import os
from enum import Enum
from typing import Any, Iterable, List, Optional

from src.core.exceptions import TokenMismatch
from src.core.models.sample import (
    PLACEHOLDER_KEY, Sample, SchemaTokens, ValidationError, ValidationReport,
)
from src.parser.chunk_parser import ChunkParser

logger = logging.getLogger(__name__)


class Goal(str, Enum):
    PRETRAIN = "pretrain"
    POST_TUNING = "post_tuning"
    IMAGE_TEXT = "image_text"


RULES_BY_GOAL = {
    Goal.PRETRAIN: ["well_formed", "token_count"],
    Goal.POST_TUNING: ["well_formed", "required_fields", "history_complete"],
    Goal.IMAGE_TEXT: ["well_formed", "token_count", "media_exists"],
}


def resolve_media_path(path: str, base_dir: Optional[str]) -> str:
    """Relative media paths are resolved against the dataset's directory."""
    if base_dir and not os.path.isabs(path):
        return os.path.join(base_dir, path)
    return path


def validate_dataset(dataset: Any, goal: Goal | str,
                     tokens: Optional[SchemaTokens] = None) -> ValidationReport:
    """Check every sample against the rules of ``goal``; failures become report entries."""
    goal = Goal(goal)
    parser = ChunkParser(tokens)
    base_dir = getattr(dataset, "base_dir", None)
    report = ValidationReport(checked_rules=list(RULES_BY_GOAL[goal]))

    for bad in getattr(dataset, "bad_lines", []):
        report.errors.append(ValidationError(bad.line_no, "well_formed", bad.error))

    for ordinal, sample in enumerate(_iter_samples(dataset)):
        report.errors.extend(_check_sample(ordinal, sample, goal, parser, base_dir))

    if report.ok:
        logger.info(f"dataset valid for goal {goal.value}")
    else:
        logger.warning(f"dataset has {len(report.errors)} validation errors for goal {goal.value}")
    return report


def _iter_samples(dataset: Any) -> Iterable[Sample]:
    return iter(dataset)


def _check_sample(ordinal: int, sample: Sample, goal: Goal, parser: ChunkParser,
                  base_dir: Optional[str]) -> List[ValidationError]:
    errors = []
    rules = RULES_BY_GOAL[goal]
    placeholder = sample.is_placeholder

    if "token_count" in rules:
        try:
            parser.check_alignment(sample)
        except TokenMismatch as e:
            errors.append(ValidationError(ordinal, "token_count", e.message))

    if "required_fields" in rules and not placeholder:
        for name in ("query", "response"):
            if not getattr(sample, name):
                errors.append(ValidationError(ordinal, "required_fields", f"empty {name}"))

    if "history_complete" in rules and not placeholder:
        for turn, (query, response) in enumerate(sample.history):
            if query and not response:
                errors.append(ValidationError(
                    ordinal, "history_complete", f"history turn {turn} has no response"))

    if "media_exists" in rules:
        for path in sample.images:
            if not os.path.exists(resolve_media_path(path, base_dir)):
                errors.append(ValidationError(ordinal, "media_exists", f"missing image {path}"))
    return errors


def _empty_like(value: Any) -> Any:
    if isinstance(value, bool):
        return False
    if isinstance(value, str):
        return ""
    if isinstance(value, (int, float)):
        return type(value)(0)
    if isinstance(value, list):
        return []
    if isinstance(value, dict):
        return {}
    return None


def make_empty_sample(schema_of: Sample) -> Sample:
    """A placeholder with the prototype's field set and value kinds, all empty."""
    return Sample(
        meta={PLACEHOLDER_KEY: True},
        extra={key: _empty_like(value) for key, value in schema_of.extra.items()},
        key_order=schema_of.key_order,
    )
