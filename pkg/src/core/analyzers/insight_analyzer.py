"""
Operator insight mining.

Purpose: Summarize the stats a dataset carries after each operator and compare
consecutive snapshots, flagging stats whose distribution shifted by more than a
threshold (total variation distance over shared histogram bins).
"""
import dataclasses
import heapq
import logging
from dataclasses import dataclass, field
from numbers import Real
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import SampleFault
from src.core.models.sample import Sample
from src.core.ops.base import Filter, OpContext

logger = logging.getLogger(__name__)

DEFAULT_BINS = 20
DEFAULT_THRESHOLD = 0.2
QUANTILES = (0.25, 0.5, 0.75)


@dataclass
class StatsSnapshot:
    """Stats of a dataset after ``op_index`` (-1 for the input); raw values are kept sorted."""
    op_index: int
    label: str = ""
    sample_count: int = 0
    values: Dict[str, List[float]] = field(default_factory=dict)
    missing: Dict[str, int] = field(default_factory=dict)
    tags: Dict[str, Dict[str, int]] = field(default_factory=dict)
    bins: int = DEFAULT_BINS

    @property
    def stat_names(self) -> List[str]:
        return sorted(self.values)

    def histogram(self, stat: str, value_range: Optional[Tuple[float, float]] = None
                  ) -> Tuple[List[float], List[int]]:
        """Fixed-width histogram over the observed range (or ``value_range``)."""
        values = np.asarray(self.values.get(stat, []), dtype=float)
        if value_range is None and len(values):
            value_range = (float(values.min()), float(values.max()))
        counts, edges = np.histogram(values, bins=self.bins, range=value_range)
        return edges.tolist(), counts.tolist()

    def summary(self, stat: str) -> Dict[str, Any]:
        values = self.values.get(stat, [])
        if not values:
            return {"count": 0, "mean": None, "quantiles": {}}
        arr = np.asarray(values, dtype=float)
        return {
            "count": len(values),
            "mean": float(arr.mean()),
            "quantiles": {str(q): float(np.quantile(arr, q)) for q in QUANTILES},
        }

    def as_dict(self) -> Dict[str, Any]:
        histograms = {}
        for stat in self.stat_names:
            edges, counts = self.histogram(stat)
            histograms[stat] = {"edges": edges, "counts": counts,
                                "missing": self.missing.get(stat, 0)}
        return {
            "op_index": self.op_index,
            "label": self.label,
            "sample_count": self.sample_count,
            "histograms": histograms,
            "summaries": {stat: self.summary(stat) for stat in self.stat_names},
            "tags": {name: dict(sorted(counts.items())) for name, counts in sorted(self.tags.items())},
        }


@dataclass
class ComparisonRow:
    stat: str
    before_index: int
    after_index: int
    score: Optional[float]
    flagged: bool
    before: Dict[str, Any]
    after: Dict[str, Any]

    @property
    def comparable(self) -> bool:
        return self.score is not None

    def as_dict(self) -> Dict[str, Any]:
        return {
            "stat": self.stat,
            "before_index": self.before_index,
            "after_index": self.after_index,
            "score": self.score,
            "flagged": self.flagged,
            "comparable": self.comparable,
            "before": self.before,
            "after": self.after,
        }


@dataclass
class InsightReport:
    threshold: float = DEFAULT_THRESHOLD
    rows: List[ComparisonRow] = field(default_factory=list)

    @property
    def flagged(self) -> List[ComparisonRow]:
        return [row for row in self.rows if row.flagged]

    def as_dict(self) -> Dict[str, Any]:
        return {"threshold": self.threshold, "rows": [row.as_dict() for row in self.rows]}


def _numeric(value: Any) -> List[float]:
    if isinstance(value, bool):
        return []
    if isinstance(value, Real):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [v for item in value for v in _numeric(item)]
    return []


def collect_snapshot(dataset: Iterable[Sample], op_index: int = -1, label: str = "",
                     bins: int = DEFAULT_BINS) -> StatsSnapshot:
    """
    Read the numeric stats and string meta tags of every sample; never modifies samples.

    List-valued stats are flattened, so their histograms count values rather
    than samples. Placeholders are ignored.
    """
    samples = [s for s in dataset if not s.is_placeholder]
    snapshot = StatsSnapshot(op_index=op_index, label=label, sample_count=len(samples), bins=bins)
    names = sorted({name for s in samples for name, v in s.stats.items()
                    if isinstance(v, (int, float, list)) and not isinstance(v, bool)})
    for name in names:
        values: List[float] = []
        missing = 0
        for sample in samples:
            if name in sample.stats:
                values.extend(_numeric(sample.stats[name]))
            else:
                missing += 1
        snapshot.values[name] = sorted(values)
        snapshot.missing[name] = missing
    for sample in samples:
        for key, value in sample.meta.items():
            if isinstance(value, str):
                counts = snapshot.tags.setdefault(key, {})
                counts[value] = counts.get(value, 0) + 1
    logger.debug(f"snapshot {op_index}: {len(samples)} samples, {len(names)} stat(s)")
    return snapshot


def merge(a: StatsSnapshot, b: StatsSnapshot) -> StatsSnapshot:
    """Combine partial snapshots of disjoint sample sets; order of merging does not matter."""
    if a.op_index != b.op_index:
        raise ValueError(f"cannot merge snapshots of ops {a.op_index} and {b.op_index}")
    merged = StatsSnapshot(op_index=a.op_index, label=a.label or b.label,
                           sample_count=a.sample_count + b.sample_count, bins=a.bins)
    for name in sorted(set(a.values) | set(b.values)):
        merged.values[name] = list(heapq.merge(a.values.get(name, []), b.values.get(name, [])))
        merged.missing[name] = a.missing.get(name, a.sample_count) + b.missing.get(name, b.sample_count)
    for source in (a.tags, b.tags):
        for key, counts in source.items():
            target = merged.tags.setdefault(key, {})
            for value, count in counts.items():
                target[value] = target.get(value, 0) + count
    return merged


def shared_range(snapshots: Sequence[StatsSnapshot], stat: str) -> Optional[Tuple[float, float]]:
    lows = [s.values[stat][0] for s in snapshots if s.values.get(stat)]
    highs = [s.values[stat][-1] for s in snapshots if s.values.get(stat)]
    if not lows:
        return None
    return min(lows), max(highs)


def total_variation(before: Sequence[float], after: Sequence[float], bins: int,
                    value_range: Tuple[float, float]) -> float:
    p, _ = np.histogram(np.asarray(before, dtype=float), bins=bins, range=value_range)
    q, _ = np.histogram(np.asarray(after, dtype=float), bins=bins, range=value_range)
    p = p / p.sum()
    q = q / q.sum()
    return float(0.5 * np.abs(p - q).sum())


def compare_snapshots(before: StatsSnapshot, after: StatsSnapshot, stat: str,
                      threshold: float = DEFAULT_THRESHOLD) -> ComparisonRow:
    """
    Shift score of one stat between two snapshots.

    Both histograms are rebinned on the union of the observed ranges. If either
    snapshot has no value for the stat the row is incomparable (score None).
    """
    if not before.values.get(stat) or not after.values.get(stat):
        return ComparisonRow(stat, before.op_index, after.op_index, None, False,
                             before.summary(stat), after.summary(stat))
    value_range = shared_range([before, after], stat)
    score = total_variation(before.values[stat], after.values[stat], before.bins, value_range)
    return ComparisonRow(stat, before.op_index, after.op_index, score, score > threshold,
                         before.summary(stat), after.summary(stat))


def compare_lineage(snapshots: Sequence[StatsSnapshot],
                    threshold: float = DEFAULT_THRESHOLD) -> InsightReport:
    """Compare every pair of consecutive snapshots on the stats either of them carries."""
    report = InsightReport(threshold=threshold)
    for before, after in zip(snapshots, snapshots[1:]):
        for stat in sorted(set(before.values) | set(after.values)):
            row = compare_snapshots(before, after, stat, threshold)
            report.rows.append(row)
            if row.flagged:
                logger.warning(f"{stat} shifted after op {after.op_index} ({after.label}): "
                               f"TVD {row.score:.3f} > {threshold}")
    return report


def stats_only(samples: Iterable[Sample], filters: Sequence[Filter],
               ctx: Optional[OpContext] = None) -> List[Sample]:
    """
    Recompute the stats of ``filters`` without dropping anything.

    Existing stats are cleared first. A sample a filter cannot measure is left
    without that filter's stats.
    """
    ctx = ctx or OpContext()
    out = []
    for sample in samples:
        if sample.is_placeholder:
            out.append(sample)
            continue
        current = dataclasses.replace(sample, stats={})
        for op in filters:
            try:
                current = op.compute_stats(current, ctx)
            except SampleFault as e:
                logger.warning(f"{op.name}: no stats for a sample: {e}")
        out.append(current)
    return out
