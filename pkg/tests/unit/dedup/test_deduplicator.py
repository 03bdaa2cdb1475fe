"""
Purpose: Test suite for exact and MinHash-LSH deduplication
"""
import orjson
import pytest

from src.core.dedup.deduplicator import (
    DedupReport,
    ExactKey,
    KeepPolicy,
    dedup_pass,
    exact_dedup,
    first_occurrences,
    sharded_dedup,
    union_candidates,
)
from src.core.dedup.minhash import DedupConfig
from src.core.exceptions import UnreadableMedia
from src.core.io.dataset import Dataset
from src.core.models.sample import PLACEHOLDER_KEY, Sample
from tests.helpers import oracle_clusters, oracle_survivors, planted_corpus, samples_from_texts


@pytest.fixture(scope="module")
def small_corpus():
    return planted_corpus(n_docs=200, n_clusters=10, cluster_size=3, seed=5)


@pytest.fixture
def config():
    return DedupConfig(jaccard_threshold=0.7, num_permutations=128, shingle_size=5, seed=42)


class TestMinhashDedup:
    def test_survivors_match_brute_force(self, small_corpus, config):
        """With verification, survivors equal the exact all-pairs result"""
        out, report = dedup_pass(samples_from_texts(small_corpus), config)
        survivors = {small_corpus.index(s.text) for s in out}

        assert survivors == oracle_survivors(small_corpus)
        assert report.removed == 20
        assert report.clusters == oracle_clusters(small_corpus)

    def test_order_is_preserved(self, small_corpus, config):
        out, _ = dedup_pass(samples_from_texts(small_corpus), config)
        positions = [small_corpus.index(s.text) for s in out]
        assert positions == sorted(positions)

    def test_keep_longest(self, config):
        base = " ".join(f"t{i}" for i in range(40))
        texts = ["unrelated words entirely here and there", base, base + " extra"]
        out, report = dedup_pass(samples_from_texts(texts), config, keep=KeepPolicy.LONGEST)

        assert [s.text for s in out] == [texts[0], texts[2]]
        assert report.representatives == [2]

    def test_empty_texts_are_never_duplicates(self, config):
        out, report = dedup_pass(samples_from_texts(["", "", "  "]), config)
        assert len(out) == 3
        assert report.clusters == []

    def test_placeholders_are_kept(self, config):
        placeholder = Sample(meta={PLACEHOLDER_KEY: True})
        samples = samples_from_texts(["a b c d e f", "a b c d e f"]) + [placeholder]
        out, report = dedup_pass(samples, config)
        assert len(out) == 2
        assert list(out)[-1].is_placeholder

    @pytest.mark.parametrize("shards", [1, 2, 4, 8])
    def test_sharding_does_not_change_the_result(self, small_corpus, config, shards):
        """Parts are concatenated; shard count only changes how buckets are spread"""
        parts = [samples_from_texts(small_corpus[:70]), samples_from_texts(small_corpus[70:])]
        report = sharded_dedup(parts, config, shards)
        removed = report.removed_ordinals()

        assert set(range(len(small_corpus))) - removed == oracle_survivors(small_corpus)
        assert report.config["shard_count"] == shards

    def test_invalid_shard_count(self, config):
        with pytest.raises(ValueError):
            sharded_dedup([], config, 0)

    def test_report_is_written(self, small_corpus, config, tmp_path):
        _, report = dedup_pass(samples_from_texts(small_corpus), config)
        path = tmp_path / "reports" / "dedup.json"
        report.write(path)
        data = orjson.loads(path.read_bytes())
        assert data["removed"] == report.removed
        assert data["config"]["keep"] == "first"
        assert set(data["timings"]) == {"signature", "bucketing", "union"}


class TestUnionCandidates:
    def test_unverified_pairs_are_all_unioned(self):
        uf = union_candidates([(0, 1), (2, 3)], elements=range(5))
        assert uf.components() == [[0, 1], [2, 3], [4]]

    def test_verification_drops_false_candidates(self):
        shingles = {0: frozenset("abc"), 1: frozenset("abd"), 2: frozenset("xyz")}
        uf = union_candidates([(0, 1), (0, 2)], verify=True, shingles=shingles, threshold=0.5)
        assert uf.connected(0, 1)
        assert not uf.connected(0, 2)

    def test_verification_needs_shingles(self):
        with pytest.raises(ValueError):
            union_candidates([(0, 1)], verify=True)

    def test_removed_ordinals(self):
        report = DedupReport(clusters=[[0, 3], [1, 2, 5]], removed=3, representatives=[3, 1])
        assert report.removed_ordinals() == {0, 2, 5}


class TestExactDedup:
    def test_text_hash_keeps_first(self):
        out = exact_dedup(samples_from_texts(["a", "b", "a", "c", "b"]))
        assert [s.text for s in out] == ["a", "b", "c"]

    def test_media_hash_compares_file_contents(self, png_file, tmp_path):
        first, copy, other = png_file(4, 4, "a.png"), png_file(4, 4, "b.png"), png_file(5, 4)
        samples = [Sample(text="1", images=[first]), Sample(text="2", images=[copy]),
                   Sample(text="3", images=[other]), Sample(text="4"), Sample(text="5")]
        out = exact_dedup(Dataset.from_samples(samples), ExactKey.MEDIA_FILE_HASH, str(tmp_path))
        assert [s.text for s in out] == ["1", "3", "4", "5"]

    def test_missing_media_is_unreadable(self, tmp_path):
        with pytest.raises(UnreadableMedia):
            exact_dedup([Sample(images=["missing.png"])], ExactKey.MEDIA_FILE_HASH, str(tmp_path))

    def test_first_occurrences_ignores_input_order(self):
        assert first_occurrences([(3, "x"), (1, "x"), (2, None), (4, None)]) == {1, 2, 4}
