"""Render insight snapshots and comparisons as a JSON report plus per-stat CSV tables."""
import csv
import io
import logging
from pathlib import Path
from typing import Dict, List, Sequence

import orjson

from src.core.analyzers.insight_analyzer import InsightReport, StatsSnapshot, shared_range
from src.core.exceptions import TargetUnwritable

logger = logging.getLogger(__name__)

REPORT_NAME = "insight_report.json"
COMPARISONS_NAME = "comparisons.csv"
HISTOGRAM_DIR = "histograms"

COMPARISON_HEADER = ["stat", "before_index", "after_index", "score", "flagged", "comparable"]
HISTOGRAM_HEADER = ["op_index", "label", "bin_start", "bin_end", "count"]


def _csv(header: List[str], rows: List[List[object]]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue().encode("utf-8")


def histogram_table(snapshots: Sequence[StatsSnapshot], stat: str) -> bytes:
    """One row per (snapshot, bin); all snapshots share edges over the union range."""
    value_range = shared_range(snapshots, stat)
    rows = []
    for snapshot in snapshots:
        if stat not in snapshot.values:
            continue
        edges, counts = snapshot.histogram(stat, value_range)
        for start, end, count in zip(edges, edges[1:], counts):
            rows.append([snapshot.op_index, snapshot.label, start, end, count])
    return _csv(HISTOGRAM_HEADER, rows)


def render_report(snapshots: Sequence[StatsSnapshot], report: InsightReport,
                  path: str | Path) -> Dict[str, Path]:
    """
    Write ``insight_report.json``, ``comparisons.csv`` and ``histograms/<stat>.csv``.

    Output is a pure function of the inputs, so re-rendering is byte-identical.

    Raises:
        ValueError: If there is no snapshot
        TargetUnwritable: If the report directory cannot be written
    """
    if not snapshots:
        raise ValueError("a report needs at least one snapshot")
    root = Path(path)
    stats = sorted({stat for snapshot in snapshots for stat in snapshot.values})
    files: Dict[str, Path] = {}
    document = {
        "threshold": report.threshold,
        "snapshots": [snapshot.as_dict() for snapshot in snapshots],
        "comparisons": [row.as_dict() for row in report.rows],
        "flagged": [f"{row.after_index}:{row.stat}" for row in report.flagged],
    }
    try:
        (root / HISTOGRAM_DIR).mkdir(parents=True, exist_ok=True)
        files[REPORT_NAME] = root / REPORT_NAME
        files[REPORT_NAME].write_bytes(
            orjson.dumps(document, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
        files[COMPARISONS_NAME] = root / COMPARISONS_NAME
        files[COMPARISONS_NAME].write_bytes(_csv(COMPARISON_HEADER, [
            [row.stat, row.before_index, row.after_index,
             "" if row.score is None else row.score, row.flagged, row.comparable]
            for row in report.rows]))
        for stat in stats:
            target = root / HISTOGRAM_DIR / f"{stat}.csv"
            target.write_bytes(histogram_table(snapshots, stat))
            files[f"{HISTOGRAM_DIR}/{stat}.csv"] = target
    except OSError as e:
        raise TargetUnwritable(f"cannot write insight report to {root}: {e}", path=str(root)) from e
    logger.info(f"insight report: {len(snapshots)} snapshot(s), {len(report.rows)} comparison(s), "
                f"{len(report.flagged)} flagged, written to {root}")
    return files
