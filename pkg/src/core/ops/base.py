"""Operator taxonomy and the unified run template.

Batchable operators (Mapper, Filter, Aggregator, FusedOp) transform one batch at
a time and may be invoked from many workers on disjoint batches. Global
operators (Deduplicator, Selector, Grouper) extract keys per batch and then
decide over the whole dataset. ScriptOp streams the whole dataset through a
child process.
"""
import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any, ClassVar, Dict, Iterable, List, Optional, Set, Tuple

from pydantic import BaseModel, ByteSize, ConfigDict, PositiveFloat, PositiveInt, model_validator
from pydantic import ValidationError as PydanticValidationError

from src.core.config import EngineConfig
from src.core.exceptions import ParamValidation, SampleFault
from src.core.models.plan import Batch, OpDescriptor, OpType
from src.core.models.sample import Sample, SchemaTokens

logger = logging.getLogger(__name__)


class OpParams(BaseModel):
    """Parameters every operator accepts, on top of its own."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    batch_size: Optional[PositiveInt] = None
    mem_required: Optional[ByteSize] = None
    cpu_required: Optional[PositiveFloat] = None


@dataclass(frozen=True)
class StatRange:
    """Closed interval; an absent bound is unbounded."""
    min: Optional[float] = None
    max: Optional[float] = None

    def __post_init__(self) -> None:
        if self.min is not None and self.max is not None and self.min > self.max:
            raise ValueError(f"range min {self.min} is greater than max {self.max}")

    def __contains__(self, value: float) -> bool:
        if self.min is not None and value < self.min:
            return False
        if self.max is not None and value > self.max:
            return False
        return True


class RangeParams(OpParams):
    """Params holding one (low, high) pair of bounds named by ``bounds``."""
    bounds: ClassVar[Tuple[str, str]] = ("min", "max")

    @model_validator(mode="after")
    def check_bounds(self) -> "RangeParams":
        self.stat_range()
        return self

    def stat_range(self) -> StatRange:
        low, high = self.bounds
        return StatRange(getattr(self, low), getattr(self, high))


@dataclass
class OpContext:
    """Run-wide context handed to operators; ``for_batch`` derives a per-batch copy."""
    config: EngineConfig = field(default_factory=EngineConfig.from_env)
    tokens: SchemaTokens = field(default_factory=SchemaTokens)
    base_dir: Optional[str] = None
    worker_id: int = 0
    io_threads: int = 4
    drop_log: Optional[List[Sample]] = None
    cache: Dict[str, Any] = field(default_factory=dict)
    _scratch: Dict[int, Dict[str, Any]] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def seed(self) -> int:
        return self.config.seed

    def for_batch(self, worker_id: Optional[int] = None) -> 'OpContext':
        return replace(self, worker_id=self.worker_id if worker_id is None else worker_id,
                       cache={})

    def scratch(self, worker_id: Optional[int] = None) -> Dict[str, Any]:
        """Per-worker scratch space for operators that need mutable state."""
        key = self.worker_id if worker_id is None else worker_id
        with self._lock:
            return self._scratch.setdefault(key, {})


@dataclass
class SampleResult:
    """What one input sample became: zero or more outputs, or a drop (with stats)."""
    outputs: List[Sample]
    dropped: Optional[Sample] = None


@dataclass
class BatchOutput:
    samples: List[Sample]
    dropped: List[Sample] = field(default_factory=list)
    added: int = 0


class Operator(ABC):
    """Base class of all operators."""

    name: ClassVar[str] = ""
    op_type: ClassVar[OpType]
    supports_batch: ClassVar[bool] = True
    commutative_filter: ClassVar[bool] = False
    shared_inputs: ClassVar[Tuple[str, ...]] = ()
    accelerator: ClassVar[bool] = False
    default_cpu_required: ClassVar[float] = 1.0
    default_mem_required: ClassVar[int] = 0

    Params: ClassVar[type[OpParams]] = OpParams

    def __init__(self, params: Optional[OpParams | Dict[str, Any]] = None, **kwargs: Any) -> None:
        if isinstance(params, OpParams):
            self.params = params
        else:
            self.params = self.validate_params({**(params or {}), **kwargs})

    @classmethod
    def validate_params(cls, raw: Dict[str, Any]) -> OpParams:
        """
        Validate raw recipe params against this operator's model.

        Raises:
            ParamValidation: listing every bad name, type or range
        """
        try:
            return cls.Params(**raw)
        except PydanticValidationError as e:
            problems = [f"{'.'.join(str(p) for p in err['loc']) or 'params'}: {err['msg']}"
                        for err in e.errors()]
            raise ParamValidation(cls.name, problems) from e

    @property
    def batch_size(self) -> Optional[int]:
        return self.params.batch_size

    @property
    def descriptor(self) -> OpDescriptor:
        params = self.params.model_dump(exclude_none=True)
        return OpDescriptor(
            name=self.name,
            op_type=self.op_type,
            params=params,
            cpu_required=self.params.cpu_required or self.default_cpu_required,
            mem_required=int(self.params.mem_required or self.default_mem_required),
            supports_batch=self.supports_batch,
            commutative_filter=self.commutative_filter,
            shared_inputs=self.shared_inputs,
            accelerator=self.accelerator,
            batch_size=self.params.batch_size,
        )

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params.model_dump(exclude_none=True)})"


class BatchOp(Operator):
    """Operators that process batches independently."""

    @abstractmethod
    def process_batch(self, samples: List[Sample], ctx: OpContext) -> List[SampleResult]:
        """Map each input sample to its result, in input order."""


class Mapper(BatchOp):
    op_type = OpType.MAPPER

    @abstractmethod
    def process(self, sample: Sample, ctx: OpContext) -> Sample | List[Sample]:
        """Transform one sample into one or more samples."""

    def process_batch(self, samples: List[Sample], ctx: OpContext) -> List[SampleResult]:
        results = []
        for sample in samples:
            out = self.process(sample, ctx)
            results.append(SampleResult(out if isinstance(out, list) else [out]))
        return results


class Filter(BatchOp):
    """Two-phase filter: compute and record stats, then keep or drop."""
    op_type = OpType.FILTER
    commutative_filter = True
    stat_keys: ClassVar[Tuple[str, ...]] = ()

    @abstractmethod
    def compute_stats(self, sample: Sample, ctx: OpContext) -> Sample:
        """Return the sample with this filter's stats written."""

    @abstractmethod
    def keep(self, sample: Sample) -> bool:
        """Decide from already-computed stats."""

    def compute_stats_batch(self, samples: List[Sample], ctx: OpContext) -> List[Sample]:
        return [self.compute_stats(sample, ctx) for sample in samples]

    def process_batch(self, samples: List[Sample], ctx: OpContext) -> List[SampleResult]:
        results = []
        for sample in self.compute_stats_batch(samples, ctx):
            if self.keep(sample):
                results.append(SampleResult([sample]))
            else:
                results.append(SampleResult([], dropped=sample))
        return results


class Aggregator(BatchOp):
    """Reduces each batched sample produced by a Grouper to one sample."""
    op_type = OpType.AGGREGATOR

    @abstractmethod
    def aggregate(self, batched: Sample, ctx: OpContext) -> Sample:
        """Reduce one batched sample."""

    def process_batch(self, samples: List[Sample], ctx: OpContext) -> List[SampleResult]:
        return [SampleResult([self.aggregate(sample, ctx)]) for sample in samples]


class GlobalOp(Operator):
    """Operators that need to see keys of the whole dataset before deciding."""
    supports_batch = False

    @abstractmethod
    def compute_keys(self, samples: List[Sample], ctx: OpContext) -> List[Any]:
        """Per-batch key extraction; runs under the fault policy."""


class Deduplicator(GlobalOp):
    op_type = OpType.DEDUPLICATOR

    @abstractmethod
    def select(self, keyed: List[Tuple[int, Any]], ctx: OpContext) -> Set[int]:
        """Ordinals that survive deduplication."""


class Selector(GlobalOp):
    op_type = OpType.SELECTOR

    @abstractmethod
    def select(self, keyed: List[Tuple[int, Any]], ctx: OpContext) -> Set[int]:
        """Ordinals that are selected; the original order is kept."""


class Grouper(GlobalOp):
    op_type = OpType.GROUPER

    @abstractmethod
    def group(self, keyed: List[Tuple[Sample, Any]], ctx: OpContext) -> List[Sample]:
        """Build batched samples from (sample, key) pairs in dataset order."""


class ScriptOp(Operator):
    op_type = OpType.SCRIPT_OP
    supports_batch = False

    @abstractmethod
    def run_stream(self, samples: Iterable[Sample], ctx: OpContext) -> List[Sample]:
        """Stream the whole dataset through the script."""


def apply_batch(op: BatchOp, batch: Batch, ctx: OpContext) -> BatchOutput:
    """Run a batchable op on one batch; placeholders pass through in place."""
    real = [s for s in batch.samples if not s.is_placeholder]
    try:
        results = iter(op.process_batch(real, ctx) if real else [])
    except SampleFault as e:
        e.locate([o for o, s in batch if not s.is_placeholder])
        raise
    out = BatchOutput(samples=[])
    for sample in batch.samples:
        if sample.is_placeholder:
            out.samples.append(sample)
            continue
        result = next(results)
        out.samples.extend(result.outputs)
        if result.dropped is not None:
            out.dropped.append(result.dropped)
        out.added += max(0, len(result.outputs) - 1)
        if not result.outputs and result.dropped is None:
            out.dropped.append(sample)
    return out


def split_placeholders(keyed: Iterable[Tuple[int, Sample]]) -> Tuple[List[Tuple[int, Sample]], Set[int]]:
    real, placeholders = [], set()
    for ordinal, sample in keyed:
        if sample.is_placeholder:
            placeholders.add(ordinal)
        else:
            real.append((ordinal, sample))
    return real, placeholders
