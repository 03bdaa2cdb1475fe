"""
Purpose: Command-line application binding YAML recipes to the engine.

Every expected failure is printed as a single ``ERROR <CODE>: message`` line
on stderr and the process exits with the error's exit code.
"""
import functools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, List, Optional

import orjson
import typer
from dotenv import load_dotenv

from src.core.analyzers.insight_analyzer import (
    DEFAULT_BINS,
    DEFAULT_THRESHOLD,
    StatsSnapshot,
    collect_snapshot,
    compare_lineage,
    stats_only,
)
from src.core.config import EngineConfig, parse_bytes
from src.core.dedup import DedupConfig, KeepPolicy, dedup_pass, sharded_dedup
from src.core.exceptions import ConfigError, RefineryError, ValidationFailed
from src.core.executor import RunResult, run_pipeline
from src.core.generators.report_generator import render_report
from src.core.io.checkpoint import resume
from src.core.io.dataset import Dataset, LoadMode, export, load
from src.core.io.splitter import DEFAULT_TARGET_BYTES, split_subsets
from src.core.models.plan import ExecutionPlan, ProbeReport
from src.core.ops import OPERATORS, Filter, OpContext, Operator, run
from src.core.planner import detect_resources, plan, probe_small_batch
from src.core.schema.validation import Goal, validate_dataset
from src.parser.recipe_parser import Recipe, load_recipe

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _fail_cleanly(command: Callable[..., Any]) -> Callable[..., Any]:
    """Turn engine errors into one grepable line and the matching exit code."""
    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except RefineryError as e:
            logger.debug("command failed", exc_info=True)
            typer.echo(e.one_line(), err=True)
            raise typer.Exit(code=e.exit_code)
    return wrapper


def _emit(payload: Any, out: Optional[Path]) -> None:
    data = orjson.dumps(payload, option=orjson.OPT_INDENT_2)
    if out is None:
        typer.echo(data.decode("utf-8"))
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(data)
    typer.echo(f"wrote {out}")


@dataclass
class Job:
    """Everything resolved from a recipe before data is processed."""
    recipe: Recipe
    config: EngineConfig
    ops: List[Operator]
    ctx: OpContext

    @classmethod
    def from_recipe(cls, recipe: Recipe) -> 'Job':
        overrides = {"seed": recipe.seed} if recipe.seed is not None else {}
        if recipe.work_dir:
            overrides["work_dir"] = recipe.work_dir
        if recipe.probe_size:
            overrides["probe_size"] = recipe.probe_size
        config = EngineConfig.from_env(**overrides)
        ops = recipe.build_ops()
        source = Path(recipe.dataset_path)
        base_dir = str(source if source.is_dir() else source.parent)
        return cls(recipe, config, ops, OpContext(config=config, base_dir=base_dir,
                                                 io_threads=recipe.np))

    @property
    def work_root(self) -> Path:
        return self.recipe.work_root(self.config)

    @property
    def mode(self) -> LoadMode:
        return LoadMode.STREAMING if self.recipe.streaming else LoadMode.MATERIALIZED

    def load(self) -> Dataset:
        dataset = load(self.recipe.dataset_path, self.mode)
        dataset.base_dir = self.ctx.base_dir
        return dataset

    def validate(self, dataset: Dataset) -> None:
        """
        Check the input against the recipe's goal before any op runs.

        Malformed lines are left to the bad-line channel and counted by the run.

        Raises:
            ValidationFailed: If a sample breaks a rule of the goal
        """
        if self.recipe.goal is None:
            return
        report = validate_dataset(dataset, self.recipe.goal)
        errors = [e for e in report.errors if e.rule_id != "well_formed"]
        if errors:
            first = errors[0]
            raise ValidationFailed(
                f"{len(errors)} validation error(s) for goal {self.recipe.goal}, first at sample "
                f"{first.ordinal} ({first.rule_id}): {first.message}", errors=len(errors))

    def probe(self, dataset: Dataset) -> ProbeReport:
        return probe_small_batch(dataset, self.ops, self.config.seed, self.config.probe_size,
                                 self.ctx)

    def plan(self, dataset: Dataset, probe: Optional[ProbeReport] = None, optimize: bool = True,
             speed_only: bool = False) -> ExecutionPlan:
        probe = probe or self.probe(dataset)
        return plan([op.descriptor for op in self.ops], probe, detect_resources(self.config),
                    dataset_size=len(dataset), speed_only=speed_only, optimize=optimize,
                    np_cap=self.recipe.np, config=self.config)


def process_recipe(recipe: Recipe, optimize: bool = True, speed_only: bool = False,
                   plan_path: Optional[Path] = None, resume_from: Optional[Path] = None,
                   stop_after: Optional[int] = None) -> RunResult:
    """Validate, probe, plan, run and export one recipe, then write a run report."""
    job = Job.from_recipe(recipe)
    digest = recipe.digest()
    start_step = 0
    counters = None
    if resume_from is not None:
        state = resume(resume_from, digest, job.mode)
        execution_plan = ExecutionPlan.from_dict(state.checkpoint.plan)
        dataset = state.dataset
        dataset.base_dir = job.ctx.base_dir
        start_step, counters = state.next_op_index, state.counters
    else:
        dataset = job.load()
        job.validate(dataset)
        if plan_path is not None:
            execution_plan = ExecutionPlan.from_dict(orjson.loads(plan_path.read_bytes()))
        else:
            execution_plan = job.plan(dataset, optimize=optimize, speed_only=speed_only)

    root = job.work_root
    result = run_pipeline(
        execution_plan, dataset, recipe.policy, job.ops, ctx=job.ctx,
        checkpoint_root=root / "ckpt" if recipe.use_checkpoint else None,
        digest=digest,
        export_path=recipe.export_path,
        drop_dir=root / "drops" if recipe.drop_log else None,
        monitor_path=f"{recipe.export_path}.monitor.jsonl",
        start_step=start_step, counters=counters, stop_after=stop_after,
        streaming=recipe.streaming, keep_placeholders=recipe.keep_placeholders,
    )
    report = {
        "recipe_digest": digest,
        "plan": execution_plan.as_dict(),
        "counters": result.counters.as_dict(),
        "completed_steps": result.completed_steps,
        "interrupted": result.interrupted,
        "export": None if result.export is None else vars(result.export),
    }
    root.mkdir(parents=True, exist_ok=True)
    (root / "run_report.json").write_bytes(orjson.dumps(report, option=orjson.OPT_INDENT_2))
    return result


def catalog_filters() -> List[Filter]:
    """Every registered filter with default params."""
    filters = []
    for cls in OPERATORS:
        if issubclass(cls, Filter):
            try:
                filters.append(cls())
            except ConfigError as e:
                logger.debug(f"{cls.name} has no default params: {e}")
    return filters


def analyze_dataset(dataset: Dataset, ops: List[Operator], filters: List[Filter],
                    ctx: OpContext, bins: int = DEFAULT_BINS) -> List[StatsSnapshot]:
    """A snapshot of the input, then one after each op run in recipe order."""
    snapshots = [collect_snapshot(stats_only(dataset, filters, ctx), -1, "input", bins)]
    current: Any = dataset
    for index, op in enumerate(ops):
        current = run(op, current, ctx)
        snapshots.append(collect_snapshot(stats_only(current, filters, ctx), index, op.name, bins))
    return snapshots


def create_app() -> typer.Typer:
    """Create the command-line application."""
    app = typer.Typer(add_completion=False, no_args_is_help=True,
                      help="Plan, run and inspect data recipes over JSONL corpora.")

    @app.callback()
    def main(verbose: bool = typer.Option(False, "--verbose", "-v")) -> None:
        load_dotenv()
        try:
            config = EngineConfig.from_env()
        except ValueError as e:
            typer.echo(f"ERROR {ConfigError.code}: {e}", err=True)
            raise typer.Exit(code=ConfigError.exit_code)
        logging.basicConfig(level="DEBUG" if verbose else config.log_level, format=LOG_FORMAT,
                            force=True)

    @app.command("process")
    @_fail_cleanly
    def process_cmd(
        config: Path = typer.Option(..., "--config", help="YAML recipe"),
        set_: List[str] = typer.Option([], "--set", help="key.path=value override (repeatable)"),
        no_optimize: bool = typer.Option(False, "--no-optimize"),
        speed_only: bool = typer.Option(False, "--speed-only"),
        plan_path: Optional[Path] = typer.Option(None, "--plan", help="plan JSON from `plan`"),
        resume_from: Optional[Path] = typer.Option(None, "--resume", help="checkpoint to resume"),
        stop_after: Optional[int] = typer.Option(None, "--stop-after", help="stop after step"),
    ) -> None:
        recipe = load_recipe(config, set_)
        result = process_recipe(recipe, not no_optimize, speed_only, plan_path, resume_from,
                                stop_after)
        counters = result.counters
        if result.interrupted:
            typer.echo(f"stopped after step {result.completed_steps - 1}")
        typer.echo(f"processed {counters.processed}, kept {counters.kept}, "
                   f"skipped batches {counters.skipped_batches}, "
                   f"placeholders {counters.placeholder_samples}")

    @app.command("analyze")
    @_fail_cleanly
    def analyze_cmd(
        dataset: Path = typer.Option(..., "--dataset"),
        config: Optional[Path] = typer.Option(None, "--config"),
        set_: List[str] = typer.Option([], "--set"),
        out: Optional[Path] = typer.Option(None, "--out", help="report directory"),
        threshold: float = typer.Option(DEFAULT_THRESHOLD, "--threshold"),
        bins: int = typer.Option(DEFAULT_BINS, "--bins"),
    ) -> None:
        engine_config = EngineConfig.from_env()
        ops: List[Operator] = []
        if config is not None:
            ops = load_recipe(config, set_).build_ops()
        data = load(dataset)
        ctx = OpContext(config=engine_config, base_dir=data.base_dir)
        filters = [op for op in ops if isinstance(op, Filter)] or catalog_filters()
        snapshots = analyze_dataset(data, ops, filters, ctx, bins)
        report = compare_lineage(snapshots, threshold)
        target = out or Path(engine_config.work_dir) / "analysis"
        render_report(snapshots, report, target)
        typer.echo(f"{len(snapshots)} snapshot(s), {len(report.flagged)} flagged shift(s); "
                   f"report in {target}")

    @app.command("probe")
    @_fail_cleanly
    def probe_cmd(
        config: Path = typer.Option(..., "--config"),
        set_: List[str] = typer.Option([], "--set"),
        out: Optional[Path] = typer.Option(None, "--out"),
    ) -> None:
        job = Job.from_recipe(load_recipe(config, set_))
        _emit(job.probe(job.load()).as_dict(), out)

    @app.command("plan")
    @_fail_cleanly
    def plan_cmd(
        config: Path = typer.Option(..., "--config"),
        set_: List[str] = typer.Option([], "--set"),
        probe_path: Optional[Path] = typer.Option(None, "--probe", help="probe JSON from `probe`"),
        no_optimize: bool = typer.Option(False, "--no-optimize"),
        speed_only: bool = typer.Option(False, "--speed-only"),
        out: Optional[Path] = typer.Option(None, "--out"),
    ) -> None:
        job = Job.from_recipe(load_recipe(config, set_))
        dataset = job.load()
        probe = ProbeReport.from_dict(orjson.loads(probe_path.read_bytes())) if probe_path else None
        _emit(job.plan(dataset, probe, not no_optimize, speed_only).as_dict(), out)

    @app.command("split")
    @_fail_cleanly
    def split_cmd(
        dataset: Path = typer.Option(..., "--dataset"),
        target_bytes: str = typer.Option(str(DEFAULT_TARGET_BYTES), "--target-bytes",
                                         help="e.g. 262144 or 0.25MiB"),
        parts: Optional[int] = typer.Option(None, "--parts", help="part count hint"),
        out: Optional[Path] = typer.Option(None, "--out"),
    ) -> None:
        try:
            target = parse_bytes(target_bytes)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        manifest = split_subsets(dataset, target, parts, out)
        typer.echo(f"{len(manifest.parts)} part(s), {len(manifest.warnings)} warning(s)")

    @app.command("dedup")
    @_fail_cleanly
    def dedup_cmd(
        dataset: Path = typer.Option(..., "--dataset"),
        export_path: Optional[Path] = typer.Option(None, "--export"),
        threshold: float = typer.Option(0.7, "--threshold"),
        num_permutations: int = typer.Option(256, "--num-permutations"),
        shingle_size: int = typer.Option(5, "--shingle-size"),
        fast: bool = typer.Option(False, "--fast", help="skip exact Jaccard verification"),
        keep: KeepPolicy = typer.Option(KeepPolicy.FIRST, "--keep"),
        shards: int = typer.Option(1, "--shards"),
        report_path: Optional[Path] = typer.Option(None, "--report"),
    ) -> None:
        engine_config = EngineConfig.from_env()
        try:
            dedup_config = DedupConfig(jaccard_threshold=threshold,
                                       num_permutations=num_permutations,
                                       shingle_size=shingle_size, seed=engine_config.seed)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        data = load(dataset)
        if shards > 1:
            report = sharded_dedup([data], dedup_config, shards, keep, verify=not fast)
            removed = report.removed_ordinals()
            survivors = Dataset.from_samples(
                [s for o, s in enumerate(data) if o not in removed], base_dir=data.base_dir)
        else:
            survivors, report = dedup_pass(data, dedup_config, keep, verify=not fast)
        if report_path is not None:
            report.write(report_path)
        if export_path is not None:
            export(survivors, export_path)
        typer.echo(f"{len(report.clusters)} cluster(s), {report.removed} removed, "
                   f"{len(survivors)} kept")

    @app.command("list-ops")
    def list_ops_cmd(as_json: bool = typer.Option(False, "--json")) -> None:
        rows = OPERATORS.describe()
        if as_json:
            _emit(rows, None)
            return
        for row in rows:
            params = ", ".join(f"{k}: {v}" for k, v in row["params"].items())
            batch = "batch" if row["supports_batch"] else "global"
            typer.echo(f"{row['name']:<32} {row['type']:<13} {batch:<7} {params}")

    @app.command("validate")
    @_fail_cleanly
    def validate_cmd(
        dataset: Path = typer.Option(..., "--dataset"),
        goal: Goal = typer.Option(Goal.PRETRAIN, "--goal"),
    ) -> None:
        report = validate_dataset(load(dataset), goal)
        for error in report.errors:
            typer.echo(f"{error.ordinal}\t{error.rule_id}\t{error.message}")
        if not report.ok:
            raise ValidationFailed(f"{len(report.errors)} validation error(s) for goal "
                                   f"{goal.value}", errors=len(report.errors))
        typer.echo(f"ok: {', '.join(report.checked_rules)}")

    return app
