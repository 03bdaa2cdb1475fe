"""Selectors: keep a subset of samples, preserving their original order."""
import math
from numbers import Real
from typing import Any, List, Optional, Set, Tuple

import numpy as np
from pydantic import Field, PositiveInt, model_validator

from src.core.exceptions import MissingStat
from src.core.models.sample import Sample
from src.core.ops.base import OpContext, OpParams, Selector
from src.core.ops.registry import OPERATORS


@OPERATORS.register("range_selector")
class RangeSelector(Selector):
    """Keeps the top_k samples (or top percentile) by a stat; ties go to lower ordinals."""

    class Params(OpParams):
        stat_key: str
        top_k: Optional[PositiveInt] = None
        percentile: Optional[float] = Field(None, gt=0, le=100)
        reverse: bool = False

        @model_validator(mode="after")
        def one_limit(self) -> OpParams:
            if (self.top_k is None) == (self.percentile is None):
                raise ValueError("exactly one of top_k or percentile is required")
            return self

    @property
    def stat_key(self) -> str:
        key = self.params.stat_key
        return key[len("stats."):] if key.startswith("stats.") else key

    def compute_keys(self, samples: List[Sample], ctx: OpContext) -> List[Any]:
        values = []
        for sample in samples:
            value = sample.stats.get(self.stat_key)
            if not isinstance(value, Real) or isinstance(value, bool):
                raise MissingStat(f"stat {self.stat_key!r} missing or not numeric; "
                                  f"run the filter producing it before range_selector",
                                  stat=self.stat_key)
            values.append(float(value))
        return values

    def limit(self, n: int) -> int:
        if self.params.top_k is not None:
            return self.params.top_k
        return math.ceil(n * self.params.percentile / 100)

    def select(self, keyed: List[Tuple[int, Any]], ctx: OpContext) -> Set[int]:
        sign = 1 if self.params.reverse else -1
        ranked = sorted(keyed, key=lambda item: (sign * item[1], item[0]))
        return {ordinal for ordinal, _ in ranked[:self.limit(len(keyed))]}


@OPERATORS.register("random_selector")
class RandomSelector(Selector):
    """Seeded uniform sample of select_num samples or a select_ratio share."""

    class Params(OpParams):
        select_num: Optional[PositiveInt] = None
        select_ratio: Optional[float] = Field(None, gt=0, le=1)
        seed: Optional[int] = None

        @model_validator(mode="after")
        def one_limit(self) -> OpParams:
            if (self.select_num is None) == (self.select_ratio is None):
                raise ValueError("exactly one of select_num or select_ratio is required")
            return self

    def compute_keys(self, samples: List[Sample], ctx: OpContext) -> List[Any]:
        return [None] * len(samples)

    def select(self, keyed: List[Tuple[int, Any]], ctx: OpContext) -> Set[int]:
        ordinals = sorted(o for o, _ in keyed)
        if self.params.select_num is not None:
            k = min(self.params.select_num, len(ordinals))
        else:
            k = math.floor(len(ordinals) * self.params.select_ratio)
        seed = ctx.seed if self.params.seed is None else self.params.seed
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(ordinals), size=k, replace=False) if k else []
        return {ordinals[int(i)] for i in picks}
