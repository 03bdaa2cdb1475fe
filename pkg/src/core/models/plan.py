"""Operator descriptors, batches, probe results and execution plans."""
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Tuple

from src.core.models.sample import Sample


class OpType(str, Enum):
    """Operator taxonomy."""
    FORMATTER = "Formatter"
    MAPPER = "Mapper"
    FILTER = "Filter"
    DEDUPLICATOR = "Deduplicator"
    SELECTOR = "Selector"
    GROUPER = "Grouper"
    AGGREGATOR = "Aggregator"
    FUSED_OP = "FusedOp"
    SCRIPT_OP = "ScriptOp"


# Operators whose relative position the planner never changes.
BARRIER_TYPES = frozenset({
    OpType.DEDUPLICATOR, OpType.SELECTOR, OpType.GROUPER,
    OpType.AGGREGATOR, OpType.SCRIPT_OP, OpType.MAPPER,
})


@dataclass
class OpDescriptor:
    """Static description of one operator instance in a recipe."""
    name: str
    op_type: OpType
    params: Dict[str, Any] = field(default_factory=dict)
    cpu_required: float = 1.0
    mem_required: int = 0
    supports_batch: bool = True
    commutative_filter: bool = False
    shared_inputs: Tuple[str, ...] = ()
    accelerator: bool = False
    batch_size: Optional[int] = None
    children: List['OpDescriptor'] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.mem_required < 0:
            raise ValueError(f"{self.name}: mem_required must be >= 0")
        if self.cpu_required <= 0:
            raise ValueError(f"{self.name}: cpu_required must be > 0")
        if self.op_type == OpType.FUSED_OP and not self.children:
            raise ValueError("a FusedOp wraps at least one child")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"{self.name}: batch_size must be >= 1")

    @property
    def is_barrier(self) -> bool:
        return self.op_type in BARRIER_TYPES or not self.commutative_filter

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["op_type"] = self.op_type.value
        data["shared_inputs"] = list(self.shared_inputs)
        return data


@dataclass
class Batch:
    """A contiguous slice of a dataset handed to one worker."""
    samples: List[Sample]
    origin_ordinals: List[int]

    def __post_init__(self) -> None:
        if len(self.samples) != len(self.origin_ordinals):
            raise ValueError("batch samples and ordinals differ in length")
        if any(b <= a for a, b in zip(self.origin_ordinals, self.origin_ordinals[1:])):
            raise ValueError("batch ordinals must be strictly increasing")

    @property
    def size(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Tuple[int, Sample]]:
        return iter(zip(self.origin_ordinals, self.samples))


@dataclass
class OpProbe:
    """Probe measurements for one recipe operator."""
    op_index: int
    name: str
    speed: Optional[float]
    peak_mem: int
    probe_sample_size: int
    wall_time: float
    selectivity: float = 1.0
    error: Optional[str] = None

    @property
    def completed(self) -> bool:
        return self.error is None and self.speed is not None


@dataclass
class ProbeReport:
    probes: List[OpProbe]
    probe_sample_size: int
    seed: int

    def for_op(self, op_index: int) -> OpProbe:
        for probe in self.probes:
            if probe.op_index == op_index:
                return probe
        raise KeyError(op_index)

    def as_dict(self) -> Dict[str, Any]:
        return {"probe_sample_size": self.probe_sample_size, "seed": self.seed,
                "probes": [asdict(p) for p in self.probes]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ProbeReport':
        return cls(probes=[OpProbe(**p) for p in data["probes"]],
                   probe_sample_size=data["probe_sample_size"], seed=data["seed"])


@dataclass
class Resources:
    cpu_count: int
    mem_bytes: int
    accel_slots: List[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.cpu_count < 1:
            raise ValueError("cpu_count must be >= 1")


@dataclass
class PlanStep:
    """One executable position: a single operator or a fused set of them."""
    op_indices: List[int]
    batch_size: int = 1000
    worker_count: int = 1
    speed: Optional[float] = None
    selectivity: float = 1.0

    @property
    def fused(self) -> bool:
        return len(self.op_indices) > 1


@dataclass
class ExecutionPlan:
    groups: List[List[PlanStep]]
    estimated_total_time: float = 0.0
    raw_estimated_time: float = 0.0
    seed: int = 0
    speed_only: bool = False
    optimized: bool = True

    def steps(self) -> List[PlanStep]:
        return [step for group in self.groups for step in group]

    def op_order(self) -> List[int]:
        return [index for step in self.steps() for index in step.op_indices]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "groups": [[asdict(step) for step in group] for group in self.groups],
            "estimated_total_time": self.estimated_total_time,
            "raw_estimated_time": self.raw_estimated_time,
            "seed": self.seed,
            "speed_only": self.speed_only,
            "optimized": self.optimized,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExecutionPlan':
        return cls(
            groups=[[PlanStep(**step) for step in group] for group in data["groups"]],
            estimated_total_time=data.get("estimated_total_time", 0.0),
            raw_estimated_time=data.get("raw_estimated_time", 0.0),
            seed=data.get("seed", 0),
            speed_only=data.get("speed_only", False),
            optimized=data.get("optimized", True),
        )
