"""Sample data model and the token conventions for multimodal alignment."""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple

import orjson
from typing_extensions import Self

from src.core.exceptions import SampleSchemaViolation

logger = logging.getLogger(__name__)

TEXT_FIELDS = ("text", "query", "response")
MEDIA_FIELDS = ("images", "videos", "audios")
MAP_FIELDS = ("meta", "stats")
RESERVED_FIELDS = TEXT_FIELDS + ("history",) + MEDIA_FIELDS + MAP_FIELDS

PLACEHOLDER_KEY = "__dj__placeholder"
BATCH_KEY = "__dj__batch__"

MODALITY_FIELDS = {"image": "images", "video": "videos", "audio": "audios"}


@dataclass(frozen=True)
class SchemaTokens:
    """Special tokens embedded in ``text``."""

    image_token: str = "<__dj__image>"
    video_token: str = "<__dj__video>"
    audio_token: str = "<__dj__audio>"
    eoc_token: str = "<|__dj__eoc|>"

    def __post_init__(self) -> None:
        tokens = self.all()
        if any(not token for token in tokens):
            raise ValueError("schema tokens must be non-empty")
        if len(set(tokens)) != len(tokens):
            raise ValueError("schema tokens must be mutually distinct")
        for a in tokens:
            for b in tokens:
                if a != b and a in b:
                    raise ValueError(f"schema token {a!r} is a substring of {b!r}")

    def all(self) -> Tuple[str, ...]:
        return (self.image_token, self.video_token, self.audio_token, self.eoc_token)

    def media_tokens(self) -> Dict[str, str]:
        """Modality name -> token."""
        return {"image": self.image_token, "video": self.video_token, "audio": self.audio_token}


@dataclass(frozen=True)
class Chunk:
    """One semantic unit of a sample's text."""

    text_span: Tuple[int, int]
    media_refs: List[Tuple[str, int]] = field(default_factory=list)


@dataclass(frozen=True)
class ValidationError:
    ordinal: int
    rule_id: str
    message: str


@dataclass
class ValidationReport:
    errors: List[ValidationError] = field(default_factory=list)
    checked_rules: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def as_dict(self) -> Dict[str, Any]:
        return {
            "ok": self.ok,
            "errors": [[e.ordinal, e.rule_id, e.message] for e in self.errors],
            "checked_rules": list(self.checked_rules),
        }


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SampleSchemaViolation(message)


def _is_scalar(value: Any) -> bool:
    return value is None or isinstance(value, (str, int, float, bool))


@dataclass(frozen=True)
class Sample:
    """One record of a dataset.

    Unknown top-level fields live in ``extra`` and are written back verbatim;
    ``key_order`` keeps the original field order so serialization round-trips.
    """

    text: str = ""
    query: str = ""
    response: str = ""
    history: List[List[str]] = field(default_factory=list)
    images: List[str] = field(default_factory=list)
    videos: List[str] = field(default_factory=list)
    audios: List[str] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)
    stats: Dict[str, Any] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)
    key_order: Tuple[str, ...] = ()

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> Self:
        """Build a sample from a decoded JSON object, checking reserved field types."""
        _require(isinstance(obj, Mapping), f"sample must be a JSON object, got {type(obj).__name__}")
        values: Dict[str, Any] = {}
        extra: Dict[str, Any] = {}
        for key, value in obj.items():
            if key in TEXT_FIELDS:
                _require(isinstance(value, str), f"field {key!r} must be a string")
                values[key] = value
            elif key in MEDIA_FIELDS:
                _require(isinstance(value, list) and all(isinstance(v, str) for v in value),
                         f"field {key!r} must be a list of path strings")
                values[key] = list(value)
            elif key == "history":
                _require(isinstance(value, list), "field 'history' must be a list")
                for pair in value:
                    _require(isinstance(pair, list) and len(pair) == 2
                             and all(isinstance(v, str) for v in pair),
                             "history entries must be [query, response] string pairs")
                values[key] = [list(pair) for pair in value]
            elif key == "meta":
                _require(isinstance(value, dict), "field 'meta' must be an object")
                values[key] = dict(value)
            elif key == "stats":
                _require(isinstance(value, dict), "field 'stats' must be an object")
                for stat, stat_value in value.items():
                    _require(_is_scalar(stat_value) or (
                        isinstance(stat_value, list) and all(_is_scalar(v) for v in stat_value)),
                        f"stat {stat!r} must be a scalar or a list of scalars")
                values[key] = dict(value)
            else:
                extra[key] = value
        return cls(**values, extra=extra, key_order=tuple(obj.keys()))

    @classmethod
    def from_json(cls, line: bytes | str) -> Self:
        return cls.from_dict(orjson.loads(line))

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for key in self.key_order:
            if key in RESERVED_FIELDS:
                out[key] = getattr(self, key)
            elif key in self.extra:
                out[key] = self.extra[key]
        for key in RESERVED_FIELDS:
            if key not in out and getattr(self, key):
                out[key] = getattr(self, key)
        for key, value in self.extra.items():
            if key not in out:
                out[key] = value
        return out

    def to_json(self) -> bytes:
        """Canonical JSONL encoding without the trailing newline."""
        return orjson.dumps(self.to_dict())

    @property
    def is_placeholder(self) -> bool:
        return bool(self.meta.get(PLACEHOLDER_KEY))

    def media(self, modality: str) -> List[str]:
        return getattr(self, MODALITY_FIELDS.get(modality, modality))

    def has_media(self) -> bool:
        return bool(self.images or self.videos or self.audios)

    def with_text(self, text: str) -> 'Sample':
        return replace(self, text=text)

    def with_meta(self, **updates: Any) -> 'Sample':
        return replace(self, meta={**self.meta, **updates})

    def with_stats(self, updates: Mapping[str, Any], op_name: Optional[str] = None) -> 'Sample':
        """Return a copy with stats written; overwriting a differing value is logged."""
        for key, value in updates.items():
            if key in self.stats and self.stats[key] != value:
                logger.warning(f"stat {key!r} overwritten by {op_name or 'operator'}: "
                               f"{self.stats[key]!r} -> {value!r}")
        return replace(self, stats={**self.stats, **updates})

    def with_extra(self, **updates: Any) -> 'Sample':
        return replace(self, extra={**self.extra, **updates})
