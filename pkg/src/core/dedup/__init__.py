from src.core.dedup.deduplicator import (
    DedupReport,
    ExactKey,
    KeepPolicy,
    dedup_pass,
    exact_dedup,
    sharded_dedup,
    union_candidates,
)
from src.core.dedup.minhash import (
    DedupConfig,
    Signature,
    band_and_bucket,
    choose_bands,
    compute_signature,
    shingle,
)
from src.core.dedup.union_find import UnionFind

__all__ = [
    "DedupConfig", "DedupReport", "ExactKey", "KeepPolicy", "Signature", "UnionFind",
    "band_and_bucket", "choose_bands", "compute_signature", "dedup_pass", "exact_dedup",
    "shingle", "sharded_dedup", "union_candidates",
]
