"""Data models shared across the engine."""
from .plan import (
    Batch, ExecutionPlan, OpDescriptor, OpProbe, OpType, PlanStep, ProbeReport, Resources,
)
from .run_state import Checkpoint, FaultMode, FaultPolicy, MonitorSample, RunCounters
from .sample import (
    PLACEHOLDER_KEY, Chunk, Sample, SchemaTokens, ValidationError, ValidationReport,
)

__all__ = [
    'Batch', 'Checkpoint', 'Chunk', 'ExecutionPlan', 'FaultMode', 'FaultPolicy',
    'MonitorSample', 'OpDescriptor', 'OpProbe', 'OpType', 'PLACEHOLDER_KEY', 'PlanStep',
    'ProbeReport', 'Resources', 'RunCounters', 'Sample', 'SchemaTokens', 'ValidationError',
    'ValidationReport',
]
