"""Exact and MinHash-LSH deduplication, single pass or sharded by bucket hash."""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import orjson
import xxhash

from src.core.dedup.minhash import (
    BucketKey,
    DedupConfig,
    Signature,
    bucket_edges,
    bucket_signatures,
    jaccard,
    signature_of,
)
from src.core.dedup.union_find import UnionFind
from src.core.exceptions import TargetUnwritable, UnreadableMedia
from src.core.io.dataset import Dataset
from src.core.models.sample import Sample
from src.core.schema.validation import resolve_media_path

logger = logging.getLogger(__name__)


class KeepPolicy(str, Enum):
    FIRST = "first"
    LONGEST = "longest"


class ExactKey(str, Enum):
    TEXT_HASH = "text_hash"
    MEDIA_FILE_HASH = "media_file_hash"


@dataclass
class DedupReport:
    """Duplicate clusters (ordinals, size >= 2) and how many samples they removed."""
    clusters: List[List[int]] = field(default_factory=list)
    removed: int = 0
    config: Dict[str, Any] = field(default_factory=dict)
    representatives: List[int] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    def removed_ordinals(self) -> Set[int]:
        reps = set(self.representatives)
        return {o for cluster in self.clusters for o in cluster if o not in reps}

    def as_dict(self) -> Dict[str, Any]:
        return {
            "clusters": self.clusters,
            "removed": self.removed,
            "config": self.config,
            "representatives": self.representatives,
            "timings": self.timings,
        }

    def write(self, path: str | Path) -> None:
        try:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            Path(path).write_bytes(orjson.dumps(self.as_dict(), option=orjson.OPT_INDENT_2))
        except OSError as e:
            raise TargetUnwritable(f"cannot write dedup report {path}: {e}", path=str(path)) from e


@dataclass
class DocKey:
    """What the MinHash deduplicator extracts per sample."""
    signature: Signature
    length: int


def union_candidates(pairs: Iterable[Tuple[int, int]], verify: bool = False,
                     shingles: Optional[Dict[int, Any]] = None, threshold: float = 1.0,
                     elements: Iterable[int] = ()) -> UnionFind:
    """Union candidate pairs; with ``verify`` only pairs whose exact Jaccard >= threshold."""
    uf = UnionFind(elements)
    for a, b in sorted(pairs):
        if verify:
            if shingles is None:
                raise ValueError("verify needs the shingle sets of the candidates")
            if jaccard(shingles[a], shingles[b]) < threshold:
                continue
        uf.union(a, b)
    return uf


def _representative(cluster: List[int], lengths: Dict[int, int], keep: KeepPolicy) -> int:
    if keep == KeepPolicy.LONGEST:
        return min(cluster, key=lambda o: (-lengths.get(o, 0), o))
    return cluster[0]


def report_from_union(uf: UnionFind, lengths: Dict[int, int], keep: KeepPolicy,
                      config: Optional[DedupConfig] = None) -> DedupReport:
    clusters = [c for c in uf.components() if len(c) > 1]
    reps = [_representative(c, lengths, keep) for c in clusters]
    return DedupReport(
        clusters=clusters,
        removed=sum(len(c) - 1 for c in clusters),
        config={**(config.as_dict() if config else {}), "keep": keep.value},
        representatives=reps,
    )


def edges_by_shard(buckets: Dict[BucketKey, List[int]], shard_count: int,
                   all_pairs: bool) -> List[Set[Tuple[int, int]]]:
    """Assign buckets to shards by bucket hash and extract each shard's edges concurrently."""
    shards: List[List[List[int]]] = [[] for _ in range(shard_count)]
    for (band, bucket_hash), members in buckets.items():
        if len(members) > 1:
            shards[(bucket_hash ^ band) % shard_count].append(members)
    if shard_count == 1:
        return [bucket_edges(shards[0], all_pairs)]
    with ThreadPoolExecutor(max_workers=shard_count) as pool:
        return list(pool.map(lambda s: bucket_edges(s, all_pairs), shards))


def minhash_select(keyed: Sequence[Tuple[int, DocKey]], config: DedupConfig,
                   keep: KeepPolicy | str = KeepPolicy.FIRST, verify: bool = True,
                   shard_count: int = 1) -> DedupReport:
    """Cluster already-signed samples and pick one representative per cluster."""
    keep = KeepPolicy(keep)
    timings: Dict[str, float] = {}

    started = time.perf_counter()
    buckets = bucket_signatures((key.signature for _, key in keyed), config)
    timings["bucketing"] = time.perf_counter() - started

    started = time.perf_counter()
    edges: Set[Tuple[int, int]] = set()
    for shard_edges in edges_by_shard(buckets, max(1, shard_count), all_pairs=verify):
        edges |= shard_edges
    shingles = {o: key.signature.shingles for o, key in keyed}
    uf = union_candidates(edges, verify, shingles, config.jaccard_threshold,
                          elements=(o for o, _ in keyed))
    timings["union"] = time.perf_counter() - started

    report = report_from_union(uf, {o: key.length for o, key in keyed}, keep, config)
    report.config["verify"] = verify
    report.timings = timings
    logger.info(f"minhash dedup: {len(edges)} candidate pair(s), {len(report.clusters)} "
                f"cluster(s), {report.removed} removed")
    return report


def sign(samples: Iterable[Tuple[int, Sample]], config: DedupConfig) -> List[Tuple[int, DocKey]]:
    return [(o, DocKey(signature_of(s.text, config, o), len(s.text))) for o, s in samples]


def dedup_pass(dataset: Iterable[Sample], config: DedupConfig,
               keep: KeepPolicy | str = KeepPolicy.FIRST,
               verify: bool = True) -> Tuple[Dataset, DedupReport]:
    """Keep one representative per near-duplicate component, in original order."""
    samples = list(dataset)
    started = time.perf_counter()
    keyed = sign(((o, s) for o, s in enumerate(samples) if not s.is_placeholder), config)
    signing = time.perf_counter() - started

    report = minhash_select(keyed, config, keep, verify)
    report.timings = {"signature": signing, **report.timings}
    removed = report.removed_ordinals()
    survivors = [s for o, s in enumerate(samples) if o not in removed]
    return Dataset.from_samples(survivors, base_dir=getattr(dataset, "base_dir", None)), report


def sharded_dedup(parts: Sequence[Iterable[Sample]], config: DedupConfig, shard_count: int,
                  keep: KeepPolicy | str = KeepPolicy.FIRST, verify: bool = True) -> DedupReport:
    """
    Dedup over several parts as if concatenated.

    Signatures are computed per part concurrently; ordinals are global offsets
    into the concatenation of ``parts``.
    """
    if shard_count < 1:
        raise ValueError("shard_count must be >= 1")
    materialized = [list(part) for part in parts]
    offsets = [0]
    for part in materialized:
        offsets.append(offsets[-1] + len(part))

    def sign_part(index: int) -> List[Tuple[int, DocKey]]:
        start = offsets[index]
        return sign(((start + i, s) for i, s in enumerate(materialized[index])
                     if not s.is_placeholder), config)

    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, len(materialized))) as pool:
        keyed = [item for part in pool.map(sign_part, range(len(materialized))) for item in part]
    signing = time.perf_counter() - started

    report = minhash_select(keyed, config, keep, verify, shard_count)
    report.config["shard_count"] = shard_count
    report.timings = {"signature": signing, **report.timings}
    return report


def file_digest(path: str, base_dir: Optional[str] = None) -> str:
    full = resolve_media_path(path, base_dir)
    try:
        hasher = xxhash.xxh3_128()
        with open(full, "rb") as handle:
            for block in iter(lambda: handle.read(1 << 20), b""):
                hasher.update(block)
        return hasher.hexdigest()
    except OSError as e:
        raise UnreadableMedia(path, str(e)) from e


def exact_key(sample: Sample, key: ExactKey | str,
              base_dir: Optional[str] = None) -> Optional[str]:
    """Digest identifying exact duplicates; None means never a duplicate."""
    key = ExactKey(key)
    if key == ExactKey.TEXT_HASH:
        return xxhash.xxh3_128_hexdigest(sample.text.encode("utf-8"))
    if not sample.images:
        return None
    return "|".join(file_digest(p, base_dir) for p in sample.images)


def first_occurrences(keyed: Iterable[Tuple[int, Optional[str]]]) -> Set[int]:
    seen: Set[str] = set()
    kept: Set[int] = set()
    for ordinal, digest in sorted(keyed, key=lambda item: item[0]):
        if digest is None or digest not in seen:
            kept.add(ordinal)
            if digest is not None:
                seen.add(digest)
    return kept


def exact_dedup(dataset: Iterable[Sample], key: ExactKey | str = ExactKey.TEXT_HASH,
                base_dir: Optional[str] = None) -> Dataset:
    """Drop samples whose digest was seen at a lower ordinal."""
    base_dir = base_dir or getattr(dataset, "base_dir", None)
    samples = list(dataset)
    keyed = [(o, exact_key(s, key, base_dir)) for o, s in enumerate(samples)
             if not s.is_placeholder]
    kept = first_occurrences(keyed) | {o for o, s in enumerate(samples) if s.is_placeholder}
    logger.info(f"exact dedup ({ExactKey(key).value}): removed {len(samples) - len(kept)}")
    return Dataset.from_samples([s for o, s in enumerate(samples) if o in kept], base_dir=base_dir)
