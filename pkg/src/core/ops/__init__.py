"""Operators; importing this package registers the whole catalog."""
from src.core.ops import dedup_ops, grouping, media_ops, script, selectors, text_ops  # noqa: F401
from src.core.ops.base import (
    Aggregator,
    BatchOp,
    Deduplicator,
    Filter,
    GlobalOp,
    Grouper,
    Mapper,
    OpContext,
    Operator,
    OpParams,
    ScriptOp,
    Selector,
    StatRange,
)
from src.core.ops.fused import FusedOp, fuse
from src.core.ops.grouping import aggregate, group
from src.core.ops.registry import OPERATORS, Registry
from src.core.ops.runner import run
from src.core.ops.script import run_script

__all__ = [
    "Aggregator", "BatchOp", "Deduplicator", "Filter", "FusedOp", "GlobalOp", "Grouper",
    "Mapper", "OPERATORS", "OpContext", "OpParams", "Operator", "Registry", "ScriptOp",
    "Selector", "StatRange", "aggregate", "fuse", "group", "run", "run_script",
]
