"""Rule-based text filters and mappers."""
import math
from collections import Counter
from typing import ClassVar, List, Optional, Tuple

from pydantic import NonNegativeFloat, NonNegativeInt, PositiveInt, model_validator

from src.core.models.sample import Sample
from src.core.ops.base import Filter, Mapper, OpContext, OpParams, RangeParams
from src.core.ops.registry import OPERATORS


class StatFilter(Filter):
    """A filter keeping samples whose single scalar stat lies in the params' range."""

    stat_key: ClassVar[str] = ""

    def stat(self, sample: Sample) -> float:
        raise NotImplementedError

    def compute_stats(self, sample: Sample, ctx: OpContext) -> Sample:
        return sample.with_stats({self.stat_key: self.stat(sample)}, self.name)

    def keep(self, sample: Sample) -> bool:
        return sample.stats[self.stat_key] in self.params.stat_range()


@OPERATORS.register("text_length_filter")
class TextLengthFilter(StatFilter):
    """Keeps samples whose text length in characters is within [min_len, max_len]."""

    stat_key = "text_len"
    stat_keys = ("text_len",)

    class Params(RangeParams):
        bounds = ("min_len", "max_len")
        min_len: Optional[NonNegativeInt] = None
        max_len: Optional[NonNegativeInt] = None

    def stat(self, sample: Sample) -> float:
        return len(sample.text)


def char_repetition_ratio(text: str, n: int) -> float:
    """Share of the text covered by its most frequent character n-gram, capped at 1.0."""
    if len(text) < n:
        return 0.0
    grams = Counter(text[i:i + n] for i in range(len(text) - n + 1))
    top = grams.most_common(1)[0][1]
    return min(1.0, top * n / max(1, len(text)))


@OPERATORS.register("character_repetition_filter")
class CharacterRepetitionFilter(StatFilter):
    stat_key = "char_rep_ratio"
    stat_keys = ("char_rep_ratio",)

    class Params(RangeParams):
        bounds = ("min_ratio", "max_ratio")
        rep_len: PositiveInt = 10
        min_ratio: Optional[NonNegativeFloat] = None
        max_ratio: Optional[NonNegativeFloat] = 0.5

    def stat(self, sample: Sample) -> float:
        return char_repetition_ratio(sample.text, self.params.rep_len)


@OPERATORS.register("words_num_filter")
class WordsNumFilter(StatFilter):
    stat_key = "num_words"
    stat_keys = ("num_words",)

    class Params(RangeParams):
        bounds = ("min_num", "max_num")
        min_num: Optional[NonNegativeInt] = None
        max_num: Optional[NonNegativeInt] = None

    def stat(self, sample: Sample) -> float:
        return len(sample.text.split())


def special_char_ratio(text: str) -> float:
    if not text:
        return 0.0
    special = sum(1 for c in text if not c.isalnum() and not c.isspace())
    return special / len(text)


@OPERATORS.register("special_characters_filter")
class SpecialCharactersFilter(StatFilter):
    stat_key = "special_char_ratio"
    stat_keys = ("special_char_ratio",)

    class Params(RangeParams):
        bounds = ("min_ratio", "max_ratio")
        min_ratio: Optional[NonNegativeFloat] = None
        max_ratio: Optional[NonNegativeFloat] = 0.25

    def stat(self, sample: Sample) -> float:
        return special_char_ratio(sample.text)


@OPERATORS.register("whitespace_normalization_mapper")
class WhitespaceNormalizationMapper(Mapper):
    """Collapses runs of whitespace to one space and trims both ends."""

    def process(self, sample: Sample, ctx: OpContext) -> Sample:
        normalized = " ".join(sample.text.split())
        return sample if normalized == sample.text else sample.with_text(normalized)


def chunk_offsets(length: int, max_chars: int, overlap_chars: int) -> List[Tuple[int, int]]:
    """(start, end) of each chunk; chunk k starts at k * (max_chars - overlap_chars)."""
    if length <= max_chars:
        return [(0, length)]
    step = max_chars - overlap_chars
    # ceil((length - overlap) / step) chunks: each one reaches past the end of the one
    # before it, so no trailing chunk lies wholly inside the overlap
    count = math.ceil((length - overlap_chars) / step)
    return [(k * step, min(length, k * step + max_chars)) for k in range(count)]


@OPERATORS.register("text_chunk_mapper")
class TextChunkMapper(Mapper):
    """Splits text into fixed-size overlapping chunks, one sample per chunk.

    Samples carrying media are passed through unchanged.
    """

    class Params(OpParams):
        max_chars: PositiveInt
        overlap_chars: NonNegativeInt = 0

        @model_validator(mode="after")
        def check_overlap(self) -> OpParams:
            if self.overlap_chars >= self.max_chars:
                raise ValueError("overlap_chars must be smaller than max_chars")
            return self

    def process(self, sample: Sample, ctx: OpContext) -> Sample | List[Sample]:
        if sample.has_media():
            return sample
        offsets = chunk_offsets(len(sample.text), self.params.max_chars, self.params.overlap_chars)
        if len(offsets) == 1:
            return sample
        return [sample.with_text(sample.text[start:end]) for start, end in offsets]
