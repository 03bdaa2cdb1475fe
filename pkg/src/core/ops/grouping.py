"""Groupers build batched samples; aggregators reduce each batched sample to one."""
from typing import Any, Dict, List, Optional, Tuple

from src.core.exceptions import MissingGroupKey
from src.core.io.dataset import Dataset
from src.core.models.sample import BATCH_KEY, Sample
from src.core.ops.base import Aggregator, Grouper, OpContext, OpParams
from src.core.ops.registry import OPERATORS


def make_batched_sample(members: List[Sample], key: Any = None) -> Sample:
    meta: Dict[str, Any] = {"group_size": len(members)}
    if key is not None:
        meta["group_key"] = key
    return Sample(meta=meta, extra={BATCH_KEY: [m.to_dict() for m in members]},
                  key_order=("meta", BATCH_KEY))


def batch_members(batched: Sample) -> List[Sample]:
    return [Sample.from_dict(m) for m in batched.extra.get(BATCH_KEY, [])]


def _ordered_groups(keyed: List[Tuple[Sample, Any]]) -> Dict[Any, List[Sample]]:
    groups: Dict[Any, List[Sample]] = {}
    for sample, key in keyed:
        groups.setdefault(key, []).append(sample)
    return groups


@OPERATORS.register("naive_grouper")
class NaiveGrouper(Grouper):
    """Groups all samples into one batched sample."""

    def compute_keys(self, samples: List[Sample], ctx: OpContext) -> List[Any]:
        return [None] * len(samples)

    def group(self, keyed: List[Tuple[Sample, Any]], ctx: OpContext) -> List[Sample]:
        if not keyed:
            return []
        return [make_batched_sample([sample for sample, _ in keyed])]


@OPERATORS.register("key_value_grouper")
class KeyValueGrouper(Grouper):
    """One batched sample per distinct meta value, in first-appearance order."""

    class Params(OpParams):
        key: str

    @property
    def meta_key(self) -> str:
        key = self.params.key
        return key[len("meta."):] if key.startswith("meta.") else key

    def compute_keys(self, samples: List[Sample], ctx: OpContext) -> List[Any]:
        keys = []
        for sample in samples:
            if self.meta_key not in sample.meta:
                raise MissingGroupKey(f"sample has no meta key {self.meta_key!r}",
                                      key=self.meta_key)
            keys.append(sample.meta[self.meta_key])
        return keys

    def group(self, keyed: List[Tuple[Sample, Any]], ctx: OpContext) -> List[Sample]:
        return [make_batched_sample(members, key)
                for key, members in _ordered_groups(keyed).items()]


@OPERATORS.register("count_aggregator")
class CountAggregator(Aggregator):
    def aggregate(self, batched: Sample, ctx: OpContext) -> Sample:
        members = batched.extra.get(BATCH_KEY, [])
        meta = {k: v for k, v in batched.meta.items() if k == "group_key"}
        return Sample(meta={**meta, "count": len(members)})


@OPERATORS.register("concat_aggregator")
class ConcatAggregator(Aggregator):
    """Joins member texts and concatenates their media lists."""

    class Params(OpParams):
        separator: str = "\n"

    def aggregate(self, batched: Sample, ctx: OpContext) -> Sample:
        members = batch_members(batched)
        meta = {k: v for k, v in batched.meta.items() if k == "group_key"}
        return Sample(
            text=self.params.separator.join(m.text for m in members),
            images=[p for m in members for p in m.images],
            videos=[p for m in members for p in m.videos],
            audios=[p for m in members for p in m.audios],
            meta={**meta, "count": len(members)},
        )


def group(dataset: Any, grouper: Grouper, ctx: Optional[OpContext] = None) -> Dataset:
    ctx = ctx or OpContext()
    samples = list(dataset)
    keyed = list(zip(samples, grouper.compute_keys(samples, ctx)))
    return Dataset.from_samples(grouper.group(keyed, ctx))


def aggregate(batched: Any, aggregator: Aggregator, ctx: Optional[OpContext] = None) -> Dataset:
    ctx = ctx or OpContext()
    return Dataset.from_samples(aggregator.aggregate(sample, ctx) for sample in batched)
