"""
Purpose: Test suite for stats snapshots and distribution-shift comparison
"""
import pytest

from src.core.analyzers.insight_analyzer import (
    collect_snapshot,
    compare_lineage,
    compare_snapshots,
    merge,
    stats_only,
)
from src.core.models.sample import PLACEHOLDER_KEY, Sample
from src.core.ops.media_ops import ImageShapeFilter
from src.core.ops.text_ops import TextLengthFilter, WordsNumFilter
from tests.helpers import samples_from_texts


def with_stats(values, name="score", **meta):
    return [Sample(text=str(v), stats={name: v}, meta=dict(meta)) for v in values]


@pytest.fixture
def uniform_lengths(ctx):
    return stats_only(samples_from_texts("a" * n for n in range(1, 101)), [TextLengthFilter()], ctx)


class TestCollectSnapshot:
    def test_collects_numeric_stats_and_tags(self):
        samples = [
            Sample(text="a", stats={"len": 3, "lang": "en", "widths": [10, 20]}, meta={"src": "web"}),
            Sample(text="b", stats={"len": 1}, meta={"src": "web", "n": 1}),
            Sample(text="c", meta={"src": "book"}),
            Sample(meta={PLACEHOLDER_KEY: True}, stats={"len": 99}),
        ]
        snapshot = collect_snapshot(samples, op_index=2, label="after")

        assert snapshot.sample_count == 3
        assert snapshot.stat_names == ["len", "widths"]
        assert snapshot.values == {"len": [1.0, 3.0], "widths": [10.0, 20.0]}
        assert snapshot.missing == {"len": 1, "widths": 2}
        assert snapshot.tags == {"src": {"web": 2, "book": 1}}

    def test_does_not_modify_samples(self):
        samples = with_stats([1, 2, 3])
        before = [s.to_json() for s in samples]
        collect_snapshot(samples)
        assert [s.to_json() for s in samples] == before

    def test_summary_and_histogram(self):
        snapshot = collect_snapshot(with_stats(range(1, 101)), bins=10)
        summary = snapshot.summary("score")
        edges, counts = snapshot.histogram("score")

        assert summary["count"] == 100
        assert summary["mean"] == pytest.approx(50.5)
        assert summary["quantiles"]["0.5"] == pytest.approx(50.5)
        assert len(edges) == 11
        assert sum(counts) == 100
        assert snapshot.summary("absent") == {"count": 0, "mean": None, "quantiles": {}}

    def test_merge_equals_whole(self):
        samples = with_stats([5, 1, 9, 3, 7, 2], src="x")
        whole = collect_snapshot(samples, op_index=0)
        left = collect_snapshot(samples[:2], op_index=0)
        right = collect_snapshot(samples[2:], op_index=0)

        for merged in (merge(left, right), merge(right, left)):
            assert merged.values == whole.values
            assert merged.missing == whole.missing
            assert merged.tags == whole.tags
            assert merged.sample_count == whole.sample_count

    def test_merge_counts_missing_stats(self):
        a = collect_snapshot(with_stats([1, 2]), op_index=0)
        b = collect_snapshot(samples_from_texts(["x", "y", "z"]), op_index=0)
        assert merge(a, b).missing == {"score": 3}

    def test_merge_rejects_different_ops(self):
        with pytest.raises(ValueError):
            merge(collect_snapshot([], op_index=0), collect_snapshot([], op_index=1))


class TestCompare:
    def test_identical_snapshots(self):
        a = collect_snapshot(with_stats([1, 2, 3, 4]), op_index=-1)
        b = collect_snapshot(with_stats([1, 2, 3, 4]), op_index=0)
        row = compare_snapshots(a, b, "score")
        assert row.score == pytest.approx(0.0)
        assert not row.flagged

    def test_disjoint_supports(self):
        a = collect_snapshot(with_stats([0, 0, 0]), op_index=-1)
        b = collect_snapshot(with_stats([10, 10]), op_index=0)
        row = compare_snapshots(a, b, "score")
        assert row.score == pytest.approx(1.0)
        assert row.flagged

    def test_score_is_symmetric(self):
        a = collect_snapshot(with_stats([1, 2, 2, 3, 8]), op_index=0)
        b = collect_snapshot(with_stats([2, 5, 6, 9]), op_index=0)
        forward = compare_snapshots(a, b, "score").score
        assert forward == pytest.approx(compare_snapshots(b, a, "score").score)
        assert 0 <= forward <= 1

    def test_missing_stat_is_incomparable(self):
        a = collect_snapshot(with_stats([1, 2]), op_index=-1)
        b = collect_snapshot(samples_from_texts(["x"]), op_index=0)
        row = compare_snapshots(a, b, "score")
        assert row.score is None
        assert not row.comparable
        assert not row.flagged

    def test_threshold_is_strict(self):
        a = collect_snapshot(with_stats([0, 10]), op_index=-1)
        b = collect_snapshot(with_stats([0, 0]), op_index=0)
        assert compare_snapshots(a, b, "score", threshold=0.5).score == pytest.approx(0.5)
        assert not compare_snapshots(a, b, "score", threshold=0.5).flagged
        assert compare_snapshots(a, b, "score", threshold=0.49).flagged


class TestLineage:
    def test_removing_longest_texts_is_flagged(self, uniform_lengths):
        kept = [s for s in uniform_lengths if len(s.text) <= 70]
        snapshots = [collect_snapshot(uniform_lengths, -1, "input"),
                     collect_snapshot(kept, 0, "text_length_filter")]
        report = compare_lineage(snapshots, threshold=0.2)

        assert [row.stat for row in report.rows] == ["text_len"]
        assert report.rows[0].score == pytest.approx(0.3)
        assert report.flagged == report.rows

    def test_identity_op_is_not_flagged(self, uniform_lengths):
        snapshots = [collect_snapshot(uniform_lengths, -1), collect_snapshot(uniform_lengths, 0)]
        report = compare_lineage(snapshots)
        assert report.rows[0].score == pytest.approx(0.0)
        assert report.flagged == []


class TestStatsOnly:
    def test_recomputes_without_dropping(self, ctx):
        samples = [Sample(text="one two three", stats={"stale": 1}), Sample(text="")]
        out = stats_only(samples, [TextLengthFilter(min_len=5), WordsNumFilter(min_num=2)], ctx)

        assert len(out) == 2
        assert out[0].stats == {"text_len": 13, "num_words": 3}
        assert out[1].stats["text_len"] == 0
        assert samples[0].stats == {"stale": 1}

    def test_unmeasurable_sample_keeps_other_stats(self, ctx):
        samples = [Sample(text="abc", images=["missing.png"])]
        out = stats_only(samples, [ImageShapeFilter(min_width=1), TextLengthFilter()], ctx)
        assert out[0].stats == {"text_len": 3}

    def test_placeholders_pass_through(self, ctx):
        placeholder = Sample(meta={PLACEHOLDER_KEY: True})
        assert stats_only([placeholder], [TextLengthFilter()], ctx) == [placeholder]
