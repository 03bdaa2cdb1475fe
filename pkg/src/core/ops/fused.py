"""FusedOp: several batchable operators applied batch by batch."""
from typing import List, Optional, Sequence

from src.core.exceptions import NonBatchableChild, SampleFault
from src.core.models.plan import OpDescriptor, OpType
from src.core.models.sample import Sample
from src.core.ops.base import BatchOp, OpContext, Operator, OpParams, SampleResult


class FusedOp(BatchOp):
    """Each batch flows through every child before the next batch is read.

    Children share the per-batch context cache, so media read by one child is
    reused by the next.
    """

    name = "fused_op"
    op_type = OpType.FUSED_OP

    def __init__(self, children: Sequence[Operator], batch_size: Optional[int] = None) -> None:
        if not children:
            raise NonBatchableChild("a fused op needs at least one child")
        for child in children:
            if not isinstance(child, BatchOp) or not child.supports_batch:
                raise NonBatchableChild(f"operator {child.name!r} does not support batch mode",
                                        op=child.name)
        super().__init__(OpParams(batch_size=batch_size))
        self.children: List[BatchOp] = list(children)

    @property
    def commutative(self) -> bool:
        return all(child.commutative_filter for child in self.children)

    @property
    def descriptor(self) -> OpDescriptor:
        children = [child.descriptor for child in self.children]
        return OpDescriptor(
            name="+".join(c.name for c in children),
            op_type=OpType.FUSED_OP,
            params={"batch_size": self.params.batch_size} if self.params.batch_size else {},
            cpu_required=max(c.cpu_required for c in children),
            mem_required=max(c.mem_required for c in children),
            supports_batch=True,
            commutative_filter=self.commutative,
            shared_inputs=tuple(sorted({s for c in children for s in c.shared_inputs})),
            accelerator=any(c.accelerator for c in children),
            batch_size=self.params.batch_size,
            children=children,
        )

    def process_batch(self, samples: List[Sample], ctx: OpContext) -> List[SampleResult]:
        outputs: List[List[Sample]] = [[s] for s in samples]
        dropped: List[Optional[Sample]] = [None] * len(samples)
        for child in self.children:
            owners = [i for i, outs in enumerate(outputs) for _ in outs]
            flat = [s for outs in outputs for s in outs]
            try:
                results = child.process_batch(flat, ctx) if flat else []
            except SampleFault as e:
                if e.position is not None:
                    e.position = owners[e.position]
                raise
            outputs = [[] for _ in samples]
            for owner, result in zip(owners, results):
                outputs[owner].extend(result.outputs)
                if result.dropped is not None and dropped[owner] is None:
                    dropped[owner] = result.dropped
        return [SampleResult(outs, dropped[i] if not outs else None)
                for i, outs in enumerate(outputs)]

    def __repr__(self) -> str:
        return f"FusedOp({[c.name for c in self.children]}, bs={self.params.batch_size})"


def fuse(children: Sequence[Operator], bs: Optional[int] = None) -> FusedOp:
    return FusedOp(children, batch_size=bs)
