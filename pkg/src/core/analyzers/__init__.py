from .insight_analyzer import (
    ComparisonRow,
    InsightReport,
    StatsSnapshot,
    collect_snapshot,
    compare_lineage,
    compare_snapshots,
    merge,
    stats_only,
)

__all__ = [
    'ComparisonRow', 'InsightReport', 'StatsSnapshot', 'collect_snapshot', 'compare_lineage',
    'compare_snapshots', 'merge', 'stats_only',
]
