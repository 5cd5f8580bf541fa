"""Command line entry point: one subcommand per preset plus `run --config`."""

# python
import json
from pathlib import Path
from typing import Any, Callable, Optional

# project
from app.core.config import Settings, apply_overrides, load_config, preset_config
from app.core.errors import (
    ConfigError,
    DomainError,
    FirstLawViolation,
    IntegrationBlowupError,
    InvariantViolation,
    NumericalError,
    PreconditionError,
)
from app.core.experiments import run_experiment
from app.core.logging import get_logger, setup_logging
from app.schemas.experiment import ExperimentConfig, Preset
from app.schemas.measurement import Scheme

# 3rd party
import typer

logger = get_logger(__name__)

EXIT_INPUT_ERROR = 2
EXIT_INVARIANT_ERROR = 3

app = typer.Typer(
    help="Work and heat along quantum trajectories of a weakly measured qubit.",
    no_args_is_help=True,
    add_completion=False,
)

SeedOption = typer.Option(None, "--seed", help="Master seed of the noise streams")
NTrajOption = typer.Option(None, "--n-traj", min=1, help="Trajectories (per initial eigenstate)")
SchemeOption = typer.Option(None, "--scheme", help="ito | stratonovich | bayes")
OutOption = typer.Option(None, "--out", help="Output directory (default: TRAJTHERMO_OUTPUT_DIR)")
FeedbackOption = typer.Option(None, "--feedback/--no-feedback", help="Switch the feedback loop")
StrengthOption = typer.Option(None, "--f", min=0.0, help="Feedback strength")
WorkersOption = typer.Option(None, "--workers", min=1, help="Worker processes")
VerboseOption = typer.Option(False, "--verbose", "-v", help="Echo log events to stderr")


def _scheme(value: Optional[str]) -> Optional[Scheme]:
    if value is None:
        return None
    try:
        return Scheme.from_alias(value)
    except ValueError as e:
        raise ConfigError(f"unknown scheme {value!r}", ["run.scheme"]) from e


def _execute(
    load: Callable[[], ExperimentConfig],
    seed: Optional[int],
    n_traj: Optional[int],
    scheme: Optional[str],
    out: Optional[Path],
    feedback: Optional[bool],
    f: Optional[float],
    workers: Optional[int],
    verbose: bool,
) -> None:
    settings = Settings()
    setup_logging(str(settings.log_dir), console=verbose, level="DEBUG" if verbose else settings.log_level)
    try:
        overrides: dict[str, Any] = {
            "run.seed": seed,
            "run.n_traj": n_traj,
            "run.scheme": _scheme(scheme),
            "feedback.enabled": feedback,
            "feedback.f": f,
        }
        cfg = apply_overrides(load(), overrides)
        summary = run_experiment(cfg, out or settings.output_dir, workers or settings.workers)
    except (ConfigError, DomainError, PreconditionError) as e:
        logger.error("Invalid input", error=str(e), error_type=type(e).__name__)
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=EXIT_INPUT_ERROR)
    except (InvariantViolation, FirstLawViolation, IntegrationBlowupError, NumericalError) as e:
        logger.error("Run violated an invariant", error=str(e), error_type=type(e).__name__)
        typer.echo(f"invariant violated: {e}", err=True)
        raise typer.Exit(code=EXIT_INVARIANT_ERROR)

    for path in summary.files:
        typer.echo(f"wrote {path}")
    typer.echo(json.dumps({"preset": summary.preset.value, "seed": summary.seed}))


def _register_preset(preset: Preset) -> None:
    def command(
        seed: Optional[int] = SeedOption,
        n_traj: Optional[int] = NTrajOption,
        scheme: Optional[str] = SchemeOption,
        out: Optional[Path] = OutOption,
        feedback: Optional[bool] = FeedbackOption,
        f: Optional[float] = StrengthOption,
        workers: Optional[int] = WorkersOption,
        verbose: bool = VerboseOption,
    ) -> None:
        _execute(lambda: preset_config(preset), seed, n_traj, scheme, out, feedback, f, workers, verbose)

    command.__doc__ = f"Run the {preset.value} preset."
    app.command(name=preset.value)(command)


for _preset in Preset:
    _register_preset(_preset)


@app.command("run")
def run(
    config: Path = typer.Option(..., "--config", help="Flat 'dotted.key = value' config file"),
    seed: Optional[int] = SeedOption,
    n_traj: Optional[int] = NTrajOption,
    scheme: Optional[str] = SchemeOption,
    out: Optional[Path] = OutOption,
    feedback: Optional[bool] = FeedbackOption,
    f: Optional[float] = StrengthOption,
    workers: Optional[int] = WorkersOption,
    verbose: bool = VerboseOption,
) -> None:
    """Run the experiment described by a config file."""
    _execute(lambda: load_config(config), seed, n_traj, scheme, out, feedback, f, workers, verbose)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
