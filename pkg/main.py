from pathlib import Path
from typing import Any, Dict, Optional

import typer
from pydantic import ValidationError as PydanticValidationError
from rich.console import Console
from rich.table import Table

from app.core.config import get_settings
from app.core.logging_config import get_logger, log_error_with_context
from app.experiments.registry import get_experiment_registry
from app.models.experiment import ExperimentConfig, ExperimentName, RunRecord
from app.models.learning import ModelKind
from app.utils.error_handlers import SwitchSimError

# Initialize logging
logger = get_logger('app.main')
console = Console()

cli = typer.Typer(
    name="switchsim",
    help="Quantum N-switch simulator and the order-control experiments built on it",
    no_args_is_help=True,
    add_completion=False,
)

SeedOption = typer.Option(None, "--seed", help="Random seed (default from DEFAULT_SEED)")
OutOption = typer.Option(None, "--out", help="Output root for run records (default from OUTPUT_ROOT)")
ConfigOption = typer.Option(None, "--config", exists=True, dir_okay=False, help="YAML experiment configuration")


def build_config(experiment: ExperimentName, config_path: Optional[Path], **flags: Any) -> ExperimentConfig:
    """Settings defaults, then the YAML file, then command-line flags."""
    settings = get_settings()
    defaults: Dict[str, Any] = {
        "seed": settings.default_seed,
        "budget": settings.train_budget,
        "restarts": settings.train_restarts,
        "n_workers": settings.n_workers,
    }
    if config_path is not None:
        return ExperimentConfig.from_yaml(config_path, defaults=defaults, experiment=experiment, **flags)
    defaults.update({k: v for k, v in flags.items() if v is not None})
    return ExperimentConfig(experiment=experiment, **defaults)


def show_record(record: RunRecord, out_root: Path) -> None:
    table = Table(title=f"{record.experiment.value} · {record.run_id}")
    table.add_column("metric")
    table.add_column("value", justify="right")
    for key, value in record.metrics.items():
        if isinstance(value, float):
            table.add_row(key, f"{value:.6g}")
        elif isinstance(value, (int, str, bool)):
            table.add_row(key, str(value))
    console.print(table)
    for failure in record.failures:
        console.print(f"[red]✗ {failure}[/red]")
    status = "[green]PASSED[/green]" if record.passed else "[red]FAILED[/red]"
    console.print(f"{status} in {record.duration_s:.2f}s · record in {out_root / record.run_id}")


def dispatch(config: ExperimentConfig, out: Optional[Path]) -> None:
    out_root = Path(out or get_settings().output_root)
    try:
        experiment = get_experiment_registry().get_for(config.experiment)
        record = experiment.run(config, out_root)
    except SwitchSimError as e:
        log_error_with_context(logger, e, "dispatch", {"experiment": config.experiment.value})
        console.print(f"[red]❌ {e.error_code}: {e.message}[/red]")
        raise typer.Exit(code=2)
    show_record(record, out_root)
    if not record.passed:
        raise typer.Exit(code=1)


def _config_or_exit(experiment: ExperimentName, config_path: Optional[Path], **flags: Any) -> ExperimentConfig:
    try:
        return build_config(experiment, config_path, **flags)
    except SwitchSimError as e:
        console.print(f"[red]❌ {e.error_code}: {e.message}[/red]")
        raise typer.Exit(code=2)
    except PydanticValidationError as e:
        console.print(f"[red]❌ Invalid configuration: {e}[/red]")
        raise typer.Exit(code=2)


@cli.command("two-switch")
def two_switch(
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
):
    """Compare simulated 2-switch outputs with their closed forms."""
    dispatch(_config_or_exit(ExperimentName.TWO_SWITCH_FORMS, config, seed=seed), out)


@cli.command("fourier")
def fourier(
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
    draws: Optional[int] = typer.Option(None, "--draws", help="Random models per check"),
):
    """Frequency supports and coefficient tables per order control."""
    dispatch(_config_or_exit(ExperimentName.FOURIER_SCAN, config, seed=seed, n_draws=draws), out)


@cli.command("three-switch")
def three_switch(
    mode: ModelKind = typer.Option(..., "--mode", help="fixed, classical or quantum order control"),
    replay: bool = typer.Option(False, "--replay/--train", help="Replay published parameters or train"),
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
    budget: Optional[int] = typer.Option(None, "--budget", help="Objective evaluations per restart"),
    restarts: Optional[int] = typer.Option(None, "--restarts", help="Seeded training restarts"),
    workers: Optional[int] = typer.Option(None, "--workers", help="Processes for parallel restarts"),
    objective: Optional[str] = typer.Option(None, "--objective", help="smoothed, accuracy or hinge"),
):
    """Train or replay the circle classifier under one order-control mode."""
    experiment = ExperimentName.THREE_SWITCH_REPLAY if replay else ExperimentName.THREE_SWITCH_TRAIN
    dispatch(_config_or_exit(experiment, config, mode=mode, seed=seed, budget=budget, restarts=restarts,
                             n_workers=workers, objective=objective), out)


@cli.command("reupload")
def reupload(
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    config: Optional[Path] = ConfigOption,
    budget: Optional[int] = typer.Option(None, "--budget", help="Objective evaluations per restart"),
    restarts: Optional[int] = typer.Option(None, "--restarts", help="Seeded training restarts"),
    workers: Optional[int] = typer.Option(None, "--workers", help="Processes for parallel restarts"),
    objective: Optional[str] = typer.Option(None, "--objective", help="smoothed, accuracy or hinge"),
):
    """Train the two-layer re-uploading baseline."""
    dispatch(_config_or_exit(ExperimentName.REUPLOADING_BASELINE, config, seed=seed, budget=budget,
                             restarts=restarts, n_workers=workers, objective=objective), out)


@cli.command("selftest")
def selftest(
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    inject_fault: bool = typer.Option(False, "--inject-fault", help="Drop the return controlled-SWAP"),
):
    """Run the invariant suite; exits nonzero when any property fails."""
    dispatch(_config_or_exit(ExperimentName.SELFTEST, None, seed=seed, inject_fault=inject_fault or None), out)


@cli.command("experiments")
def experiments():
    """List discovered experiments."""
    registry = get_experiment_registry()
    table = Table(title="Experiments")
    table.add_column("name")
    table.add_column("handles")
    table.add_column("description")
    for name, experiment in registry.get_active_experiments().items():
        metadata = experiment.get_experiment_metadata()
        table.add_row(name, ", ".join(metadata["handles"]), metadata["description"])
    console.print(table)
    info = registry.get_registry_info()
    if info["inactive_experiments"]:
        console.print(f"Inactive (ACTIVE_EXPERIMENTS={info['active_experiments_env']}): "
                      f"{', '.join(info['inactive_experiments'])}")


if __name__ == "__main__":
    cli()
