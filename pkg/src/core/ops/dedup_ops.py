"""Registered deduplicator operators."""
import logging
from dataclasses import replace
from typing import Any, List, Literal, Optional, Set, Tuple

from pydantic import Field, PositiveInt

from src.core.dedup.deduplicator import (
    DocKey,
    ExactKey,
    exact_key,
    first_occurrences,
    minhash_select,
)
from src.core.dedup.minhash import DedupConfig, signature_of
from src.core.models.sample import Sample
from src.core.ops.base import Deduplicator, OpContext, OpParams
from src.core.ops.registry import OPERATORS

logger = logging.getLogger(__name__)


@OPERATORS.register("document_deduplicator")
class DocumentDeduplicator(Deduplicator):
    """Exact text match; the first occurrence survives."""

    class Params(OpParams):
        lowercase: bool = False

    def compute_keys(self, samples: List[Sample], ctx: OpContext) -> List[Any]:
        if self.params.lowercase:
            samples = [s.with_text(s.text.lower()) for s in samples]
        return [exact_key(s, ExactKey.TEXT_HASH) for s in samples]

    def select(self, keyed: List[Tuple[int, Any]], ctx: OpContext) -> Set[int]:
        return first_occurrences(keyed)


@OPERATORS.register("image_deduplicator")
class ImageDeduplicator(Deduplicator):
    """Exact match of image file contents; samples without images are kept."""
    shared_inputs = ("images",)

    def compute_keys(self, samples: List[Sample], ctx: OpContext) -> List[Any]:
        return [exact_key(s, ExactKey.MEDIA_FILE_HASH, ctx.base_dir) for s in samples]

    def select(self, keyed: List[Tuple[int, Any]], ctx: OpContext) -> Set[int]:
        return first_occurrences(keyed)


@OPERATORS.register("document_minhash_deduplicator")
class DocumentMinhashDeduplicator(Deduplicator):
    """Near-duplicate removal with MinHash-LSH and union-find."""

    class Params(OpParams):
        jaccard_threshold: float = Field(0.7, gt=0, le=1)
        num_permutations: PositiveInt = 256
        shingle_size: PositiveInt = 5
        seed: Optional[int] = None
        keep: Literal["first", "longest"] = "first"
        verify: bool = True

    def dedup_config(self, ctx: OpContext) -> DedupConfig:
        return DedupConfig(
            jaccard_threshold=self.params.jaccard_threshold,
            num_permutations=self.params.num_permutations,
            shingle_size=self.params.shingle_size,
            seed=ctx.seed if self.params.seed is None else self.params.seed,
        )

    def compute_keys(self, samples: List[Sample], ctx: OpContext) -> List[Any]:
        config = self.dedup_config(ctx)
        return [DocKey(signature_of(s.text, config), len(s.text)) for s in samples]

    def select(self, keyed: List[Tuple[int, Any]], ctx: OpContext) -> Set[int]:
        stamped = [(o, replace(key, signature=replace(key.signature, sample_ordinal=o)))
                   for o, key in keyed]
        report = minhash_select(stamped, self.dedup_config(ctx), self.params.keep,
                                self.params.verify)
        removed = report.removed_ordinals()
        return {o for o, _ in keyed if o not in removed}
