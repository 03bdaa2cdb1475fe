from src.core.planner.adapter import probe_small_batch
from src.core.planner.optimizer import (
    detect_fusible_groups,
    estimate_fused_speed,
    order_cost,
    plan,
    reorder_group,
)
from src.core.planner.resources import allocate_workers, detect_resources, select_batch_size

__all__ = [
    "allocate_workers", "detect_fusible_groups", "detect_resources", "estimate_fused_speed",
    "order_cost", "plan", "probe_small_batch", "reorder_group", "select_batch_size",
]
