"""
Purpose: Parse YAML data recipes into a validated Recipe model, apply dotted
``key=value`` overrides and serialize recipes back to YAML.
"""
import copy
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    NonNegativeInt,
    PositiveInt,
    field_validator,
)
from pydantic import ValidationError as PydanticValidationError

from src.core.config import EngineConfig
from src.core.exceptions import RecipeError, SourceNotFound
from src.core.io.checkpoint import recipe_digest, source_fingerprint
from src.core.models.run_state import FaultMode, FaultPolicy

logger = logging.getLogger(__name__)

ProcessStep = Dict[str, Dict[str, Any]]


class Recipe(BaseModel):
    """One processing job: where data comes from and goes to, and the ordered op list."""
    model_config = ConfigDict(extra="allow", use_enum_values=True)

    project_name: str = "refinery"
    dataset_path: str
    export_path: str
    np: PositiveInt = 4
    fault_mode: FaultMode = FaultMode.SKIP_BATCH
    max_retries: NonNegativeInt = 1
    backoff: List[NonNegativeFloat] = Field(default_factory=lambda: [0.1, 0.2, 0.4])
    use_checkpoint: bool = True
    work_dir: Optional[str] = None
    seed: Optional[int] = None
    streaming: bool = False
    drop_log: bool = False
    keep_placeholders: bool = False
    goal: Optional[Literal["pretrain", "post_tuning", "image_text"]] = "pretrain"
    probe_size: Optional[PositiveInt] = None
    process: List[ProcessStep] = Field(default_factory=list)

    @field_validator("process", mode="before")
    @classmethod
    def normalize_process(cls, value: Any) -> List[ProcessStep]:
        """Each entry is ``{op_name: {params}}``; a bare name or null params mean no params."""
        if value is None:
            return []
        if not isinstance(value, list):
            raise ValueError("process must be a list of operators")
        steps = []
        for position, entry in enumerate(value):
            if isinstance(entry, str):
                entry = {entry: {}}
            if not isinstance(entry, dict) or len(entry) != 1:
                raise ValueError(f"process[{position}] must map exactly one op name to its params")
            (name, params), = entry.items()
            if params is None:
                params = {}
            if not isinstance(params, dict):
                raise ValueError(f"process[{position}] ({name}): params must be a mapping")
            steps.append({str(name): params})
        return steps

    @property
    def steps(self) -> List[Tuple[str, Dict[str, Any]]]:
        return [next(iter(step.items())) for step in self.process]

    @property
    def policy(self) -> FaultPolicy:
        return FaultPolicy(mode=self.fault_mode, max_retries=self.max_retries,
                           backoff=tuple(self.backoff))

    def build_ops(self) -> List[Any]:
        """
        Instantiate every op through the registry.

        Raises:
            UnknownOp: If a name is not registered
            ParamValidation: If params do not validate
        """
        from src.core.ops import OPERATORS

        return [OPERATORS.create(name, params) for name, params in self.steps]

    def digest(self) -> str:
        """Identity of the processing and its input data; np, export path and checkpoint settings do not count."""
        return recipe_digest({
            "process": self.process,
            "seed": self.seed,
            "fault_mode": self.fault_mode,
            "source": source_fingerprint(self.dataset_path),
        })

    def work_root(self, config: Optional[EngineConfig] = None) -> Path:
        config = config or EngineConfig.from_env()
        return Path(self.work_dir or config.work_dir) / self.project_name

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _set_dotted(data: Dict[str, Any], path: str, value: Any) -> None:
    parts = path.split(".")
    if not all(parts):
        raise RecipeError(f"invalid override path: {path!r}")
    target: Any = data
    for position, part in enumerate(parts[:-1]):
        if isinstance(target, list):
            if not part.isdigit() or int(part) >= len(target):
                raise RecipeError(f"override path {path!r}: no list item {part!r}")
            target = target[int(part)]
        elif isinstance(target, dict):
            if target.get(part) is None:
                target[part] = {}
            target = target[part]
        else:
            raise RecipeError(f"override path {path!r}: {'.'.join(parts[:position])} is not a mapping")
    last = parts[-1]
    if isinstance(target, list):
        if not last.isdigit() or int(last) >= len(target):
            raise RecipeError(f"override path {path!r}: no list item {last!r}")
        target[int(last)] = value
    elif isinstance(target, dict):
        target[last] = value
    else:
        raise RecipeError(f"override path {path!r}: cannot set {last!r} on a scalar")


def apply_overrides(data: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """
    Apply ``a.b=value`` overrides in place; values are parsed as YAML scalars.

    List items are addressed by index, e.g. ``process.0.text_length_filter.min_len=10``.
    """
    for override in overrides:
        if "=" not in override:
            raise RecipeError(f"invalid override {override!r}, expected key.path=value")
        path, raw = override.split("=", 1)
        try:
            value = yaml.safe_load(raw) if raw else ""
        except yaml.YAMLError:
            value = raw
        _set_dotted(data, path.strip(), value)
        logger.debug(f"override {path.strip()} = {value!r}")
    return data


def parse_recipe(data: Any, overrides: Iterable[str] = ()) -> Recipe:
    """
    Validate a recipe mapping.

    Raises:
        RecipeError: If the mapping is not a valid recipe
    """
    if not isinstance(data, dict):
        raise RecipeError("a recipe must be a YAML mapping")
    data = apply_overrides(copy.deepcopy(data), overrides)
    try:
        recipe = Recipe(**data)
    except PydanticValidationError as e:
        problems = [f"{'.'.join(str(p) for p in err['loc']) or 'recipe'}: {err['msg']}"
                    for err in e.errors()]
        raise RecipeError("invalid recipe: " + "; ".join(problems), problems=problems) from e
    for key in sorted(recipe.model_extra or {}):
        logger.warning(f"unknown recipe key {key!r} ignored")
    return recipe


def load_recipe(path: str | Path, overrides: Iterable[str] = ()) -> Recipe:
    """
    Load a YAML recipe file.

    Raises:
        SourceNotFound: If the file does not exist
        RecipeError: If it is not valid YAML or not a valid recipe
    """
    path = Path(path)
    if not path.exists():
        raise SourceNotFound(f"recipe not found: {path}", path=str(path))
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise RecipeError(f"cannot parse recipe {path}: {e}") from e
    recipe = parse_recipe(data or {}, overrides)
    logger.info(f"loaded recipe {recipe.project_name!r} with {len(recipe.process)} op(s) "
                f"from {path}")
    return recipe


def dump_recipe(recipe: Recipe) -> str:
    return yaml.safe_dump(recipe.to_dict(), sort_keys=False, allow_unicode=True)


def save_recipe(recipe: Recipe, path: str | Path) -> None:
    Path(path).write_text(dump_recipe(recipe), encoding="utf-8")
