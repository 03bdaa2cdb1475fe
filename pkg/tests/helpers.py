"""Shared builders for synthetic corpora, brute-force oracles and test-only operators."""
import random
from collections import Counter
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import orjson

from src.core.dedup.minhash import jaccard, shingle
from src.core.dedup.union_find import UnionFind
from src.core.exceptions import SampleFault
from src.core.models.plan import OpProbe, ProbeReport
from src.core.models.sample import Sample
from src.core.ops.base import Filter, Mapper, OpContext

VOCAB = [f"w{i}" for i in range(5000)]


def samples_from_texts(texts: Iterable[str]) -> List[Sample]:
    return [Sample(text=t, key_order=("text",)) for t in texts]


def canonical(samples: Iterable[Sample]) -> Counter:
    """Multiset of samples, independent of dict key order."""
    return Counter(orjson.dumps(s.to_dict(), option=orjson.OPT_SORT_KEYS) for s in samples)


def random_doc(rng: random.Random, n_tokens: int = 100) -> List[str]:
    return [rng.choice(VOCAB) for _ in range(n_tokens)]


def planted_corpus(n_docs: int = 1000, n_clusters: int = 50, cluster_size: int = 3,
                   seed: int = 7) -> List[str]:
    """
    Random documents plus ``n_clusters`` groups of near duplicates.

    Each variant replaces one token of its cluster's base document, which
    keeps every pair in a cluster at Jaccard >= 0.8 over 5-token shingles.
    """
    rng = random.Random(seed)
    docs: List[str] = []
    for cluster in range(n_clusters):
        base = random_doc(rng)
        docs.append(" ".join(base))
        for variant in range(1, cluster_size):
            tokens = list(base)
            tokens[10 * variant] = f"x{cluster}v{variant}"
            docs.append(" ".join(tokens))
    while len(docs) < n_docs:
        docs.append(" ".join(random_doc(rng)))
    rng.shuffle(docs)
    return docs


def oracle_clusters(texts: Sequence[str], shingle_size: int = 5,
                    threshold: float = 0.7) -> List[List[int]]:
    """Connected components of the all-pairs exact Jaccard >= threshold graph."""
    sets = [frozenset(shingle(t, shingle_size)) for t in texts]
    uf = UnionFind(range(len(texts)))
    for a, b in combinations(range(len(texts)), 2):
        if sets[a] and sets[b] and jaccard(sets[a], sets[b]) >= threshold:
            uf.union(a, b)
    return [c for c in uf.components() if len(c) > 1]


def oracle_survivors(texts: Sequence[str], shingle_size: int = 5,
                     threshold: float = 0.7) -> Set[int]:
    removed = {o for c in oracle_clusters(texts, shingle_size, threshold) for o in c[1:]}
    return set(range(len(texts))) - removed


def shingle_pair(similarity: float, union_size: int = 300) -> Tuple[FrozenSet[str], FrozenSet[str]]:
    """Two shingle sets whose exact Jaccard similarity is ``similarity``."""
    shared = round(similarity * union_size)
    if (union_size - shared) % 2:
        raise ValueError("union_size - shared must be even")
    only = (union_size - shared) // 2
    common = {f"c{i}" for i in range(shared)}
    return (frozenset(common | {f"a{i}" for i in range(only)}),
            frozenset(common | {f"b{i}" for i in range(only)}))


def probe_report(speeds: Sequence[Optional[float]],
                 selectivities: Optional[Sequence[float]] = None,
                 peak_mem: int = 0, size: int = 100) -> ProbeReport:
    selectivities = selectivities or [1.0] * len(speeds)
    probes = [
        OpProbe(i, f"op{i}", speed=v, peak_mem=peak_mem, probe_sample_size=size,
                wall_time=size / v if v else 0.0, selectivity=s,
                error=None if v is not None else "RuntimeError: boom")
        for i, (v, s) in enumerate(zip(speeds, selectivities))
    ]
    return ProbeReport(probes=probes, probe_sample_size=size, seed=42)


class MarkerFailFilter(Filter):
    """Raises a sample fault on any batch holding a text that contains ``marker``."""

    name = "marker_fail_filter"

    def __init__(self, marker: str = "BOOM", fail_times: Optional[int] = None) -> None:
        super().__init__()
        self.marker = marker
        self.fail_times = fail_times
        self.failures = 0

    def compute_stats(self, sample: Sample, ctx: OpContext) -> Sample:
        return sample

    def compute_stats_batch(self, samples: List[Sample], ctx: OpContext) -> List[Sample]:
        if any(self.marker in s.text for s in samples):
            if self.fail_times is None or self.failures < self.fail_times:
                self.failures += 1
                raise SampleFault(f"corrupt sample containing {self.marker}")
        return samples

    def keep(self, sample: Sample) -> bool:
        return True


class UpperMapper(Mapper):
    name = "upper_mapper"

    def process(self, sample: Sample, ctx: OpContext) -> Sample:
        return sample.with_text(sample.text.upper())


class DropAllMapper(Mapper):
    name = "drop_all_mapper"

    def process(self, sample: Sample, ctx: OpContext) -> List[Sample]:
        return []


def records(texts: Iterable[str], **meta: Any) -> List[Dict[str, Any]]:
    return [{"text": t, "meta": dict(meta)} if meta else {"text": t} for t in texts]
