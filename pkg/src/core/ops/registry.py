"""Name -> operator class registry."""
import logging
from typing import Any, Callable, Dict, Iterator, List, Optional, Type, TypeVar

from src.core.exceptions import ParamValidation, UnknownOp
from src.core.ops.base import Operator

logger = logging.getLogger(__name__)

OpClass = TypeVar("OpClass", bound=Type[Operator])


class Registry:
    """Registered operators, enumerable for discovery."""

    def __init__(self) -> None:
        self._ops: Dict[str, Type[Operator]] = {}

    def register(self, name: str) -> Callable[[OpClass], OpClass]:
        def decorator(cls: OpClass) -> OpClass:
            if name in self._ops and self._ops[name] is not cls:
                raise ValueError(f"operator {name!r} registered twice")
            cls.name = name
            self._ops[name] = cls
            return cls
        return decorator

    def get(self, name: str) -> Type[Operator]:
        try:
            return self._ops[name]
        except KeyError:
            raise UnknownOp(name) from None

    def create(self, name: str, params: Optional[Dict[str, Any]] = None) -> Operator:
        """Instantiate an operator, validating params before any data is touched."""
        cls = self.get(name)
        if params is not None and not isinstance(params, dict):
            raise ParamValidation(name, [f"params must be a mapping, got {type(params).__name__}"])
        return cls(params or {})

    def names(self) -> List[str]:
        return sorted(self._ops)

    def __contains__(self, name: object) -> bool:
        return name in self._ops

    def __iter__(self) -> Iterator[Type[Operator]]:
        return (self._ops[name] for name in self.names())

    def describe(self) -> List[Dict[str, Any]]:
        """Name, type, params and batch support of every registered op."""
        rows = []
        for cls in self:
            fields = {
                field_name: str(info.annotation).replace("typing.", "")
                for field_name, info in cls.Params.model_fields.items()
            }
            rows.append({
                "name": cls.name,
                "type": cls.op_type.value,
                "params": fields,
                "supports_batch": cls.supports_batch,
            })
        return rows


OPERATORS = Registry()
