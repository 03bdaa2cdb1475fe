"""
MinHash signatures and LSH banding.

Purpose: Estimate Jaccard similarity of word-shingle sets with fixed-length
signatures and find candidate near-duplicate pairs by grouping samples whose
band slices hash equal.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import numpy as np
import xxhash

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
MAX_HASH = np.uint64(MASK64)

BucketKey = Tuple[int, int]


@dataclass
class DedupConfig:
    """MinHash-LSH settings; bands and rows are derived from the threshold when omitted."""
    jaccard_threshold: float = 0.7
    num_permutations: int = 256
    shingle_size: int = 5
    bands: Optional[int] = None
    rows_per_band: Optional[int] = None
    seed: int = 42

    def __post_init__(self) -> None:
        if not 0 < self.jaccard_threshold <= 1:
            raise ValueError("jaccard_threshold must be in (0, 1]")
        if self.num_permutations < 1:
            raise ValueError("num_permutations must be >= 1")
        if self.shingle_size < 1:
            raise ValueError("shingle_size must be >= 1")
        if self.bands is None or self.rows_per_band is None:
            self.bands, self.rows_per_band = choose_bands(self.num_permutations,
                                                          self.jaccard_threshold)
        if self.bands * self.rows_per_band != self.num_permutations:
            raise ValueError(f"bands x rows_per_band ({self.bands} x {self.rows_per_band}) "
                             f"must equal num_permutations ({self.num_permutations})")

    def as_dict(self) -> Dict[str, Any]:
        return {
            "jaccard_threshold": self.jaccard_threshold,
            "num_permutations": self.num_permutations,
            "shingle_size": self.shingle_size,
            "bands": self.bands,
            "rows_per_band": self.rows_per_band,
            "seed": self.seed,
        }


@dataclass
class Signature:
    sample_ordinal: int
    minhash_values: np.ndarray
    empty: bool = False
    shingles: FrozenSet[str] = field(default_factory=frozenset, repr=False)


def choose_bands(num_permutations: int, threshold: float) -> Tuple[int, int]:
    """(b, r) with b * r == num_permutations minimizing |(1/b)^(1/r) - threshold|."""
    best: Optional[Tuple[float, int, int]] = None
    for b in range(1, num_permutations + 1):
        if num_permutations % b:
            continue
        r = num_permutations // b
        error = abs((1 / b) ** (1 / r) - threshold)
        if best is None or error < best[0]:
            best = (error, b, r)
    assert best is not None
    return best[1], best[2]


def shingle(text: str, k: int) -> Set[str]:
    """Lowercased whitespace-token k-grams; fewer than k tokens give one shingle."""
    tokens = text.lower().split()
    if not tokens:
        return set()
    if len(tokens) < k:
        return {" ".join(tokens)}
    return {" ".join(tokens[i:i + k]) for i in range(len(tokens) - k + 1)}


def _mix(x: np.ndarray) -> np.ndarray:
    """64-bit finalizer (splitmix64) over a uint64 array."""
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


_masks_cache: Dict[Tuple[int, int], np.ndarray] = {}


def permutation_masks(seed: int, num_permutations: int) -> np.ndarray:
    key = (seed & MASK64, num_permutations)
    if key not in _masks_cache:
        base = np.uint64(key[0]) ^ np.arange(num_permutations, dtype=np.uint64)
        _masks_cache[key] = _mix(base)
    return _masks_cache[key]


def hash_shingles(shingles: Iterable[str], seed: int) -> np.ndarray:
    seed64 = seed & MASK64
    return np.fromiter((xxhash.xxh64_intdigest(s.encode("utf-8"), seed=seed64)
                        for s in shingles), dtype=np.uint64)


def compute_signature(shingles: Iterable[str], config: DedupConfig,
                      ordinal: int = 0) -> Signature:
    """Value i is the minimum over shingles of the i-th seeded permutation hash."""
    shingle_set = frozenset(shingles)
    if not shingle_set:
        return Signature(ordinal, np.full(config.num_permutations, MAX_HASH, dtype=np.uint64),
                         empty=True)
    hashes = hash_shingles(sorted(shingle_set), config.seed)
    masks = permutation_masks(config.seed, config.num_permutations)
    values = _mix(hashes[:, None] ^ masks[None, :]).min(axis=0)
    return Signature(ordinal, values, shingles=shingle_set)


def signature_of(text: str, config: DedupConfig, ordinal: int = 0) -> Signature:
    return compute_signature(shingle(text, config.shingle_size), config, ordinal)


def signature_agreement(a: Signature, b: Signature) -> float:
    """Fraction of positions where two signatures agree, an estimate of Jaccard."""
    return float(np.mean(a.minhash_values == b.minhash_values))


def jaccard(a: Set[str] | FrozenSet[str], b: Set[str] | FrozenSet[str]) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def bucket_signatures(signatures: Iterable[Signature],
                      config: DedupConfig) -> Dict[BucketKey, List[int]]:
    """Group ordinals by (band, band-slice hash); empty signatures never enter a bucket."""
    buckets: Dict[BucketKey, List[int]] = {}
    r = config.rows_per_band
    for signature in signatures:
        if signature.empty:
            continue
        if len(signature.minhash_values) != config.num_permutations:
            raise ValueError("signature length does not match num_permutations")
        for band in range(config.bands):
            chunk = signature.minhash_values[band * r:(band + 1) * r].tobytes()
            key = (band, xxhash.xxh64_intdigest(chunk, seed=band))
            buckets.setdefault(key, []).append(signature.sample_ordinal)
    return buckets


def bucket_edges(buckets: Iterable[List[int]], all_pairs: bool = True) -> Set[Tuple[int, int]]:
    """Candidate pairs of every multi-member bucket: all pairs, or a star on the lowest ordinal."""
    edges: Set[Tuple[int, int]] = set()
    for members in buckets:
        if len(members) < 2:
            continue
        ordered = sorted(set(members))
        if all_pairs:
            edges.update(combinations(ordered, 2))
        else:
            edges.update((ordered[0], other) for other in ordered[1:])
    return edges


def band_and_bucket(signatures: Iterable[Signature], config: DedupConfig,
                    all_pairs: bool = True) -> Set[Tuple[int, int]]:
    return bucket_edges(bucket_signatures(signatures, config).values(), all_pairs)
