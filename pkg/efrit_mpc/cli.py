"""Command-line interface for efrit-mpc."""

import argparse
import json
import logging
import sys
import traceback
from collections.abc import Callable
from pathlib import Path
from typing import TYPE_CHECKING, Any

import yaml

from efrit_mpc.config import config
from efrit_mpc.core.errors import ConfigError, EfritMpcError, NumericError

if TYPE_CHECKING:
    from efrit_mpc.core.scenario import RunOutputs, ScenarioConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def setup_logging() -> None:
    """Set up logging from the `logging` section of the settings."""
    level_name = str(config.get("logging.level", "INFO")).upper()
    log_level = getattr(logging, level_name, logging.INFO)
    log_file = config.get("logging.file")

    # Ensure log directory exists
    if log_file:
        log_dir = Path(log_file).parent
        log_dir.mkdir(parents=True, exist_ok=True)

    logging.basicConfig(
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler(log_file) if log_file else logging.NullHandler(),
            logging.StreamHandler(),
        ],
        force=True,
    )


def _parse_assignment(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"Expected KEY=VALUE, got '{text}'")
    return key.strip(), value.strip()


def _parse_value(text: str) -> Any:
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse value '{text}': {e}") from e


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Dotted-key overrides from --set, --seed, --out and --theta-override."""
    overrides: dict[str, Any] = {}
    for item in getattr(args, "set", None) or []:
        key, value = _parse_assignment(item)
        overrides[key] = _parse_value(value)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None):
        overrides["output.dir"] = args.out
    if getattr(args, "theta_override", None):
        overrides["tuning.theta_override"] = args.theta_override
    return overrides


def _sweep_overrides(items: list[str]) -> list[dict[str, Any]]:
    """Zip `KEY=V1,V2,...` lists into one override mapping per run."""
    columns: dict[str, list[Any]] = {}
    for item in items:
        key, values = _parse_assignment(item)
        columns[key] = [_parse_value(v) for v in values.split(",")]
    lengths = {len(v) for v in columns.values()}
    if len(lengths) > 1:
        raise ConfigError("All --vary lists must have the same number of values")
    count = lengths.pop() if lengths else 0
    return [{k: v[i] for k, v in columns.items()} for i in range(count)]


def _write_error_record(
    directory: Path | None, command: str, error: Exception, files: list[Path]
) -> None:
    """Write error.json next to whatever the failed run already produced."""
    if directory is None:
        return
    from efrit_mpc.utils.file_utils import write_json

    try:
        directory.mkdir(parents=True, exist_ok=True)
        write_json(
            directory / "error.json",
            {
                "error": str(error),
                "type": type(error).__name__,
                "command": command,
                "partial_outputs": [str(f) for f in files],
            },
        )
    except OSError as e:
        logger.error(f"Could not write error record: {e}")


def _guarded(
    command: Callable[[argparse.Namespace, dict[str, Any]], int],
) -> Callable[[argparse.Namespace], int]:
    """Map errors to exit codes and write an error record."""

    def run(args: argparse.Namespace) -> int:
        state: dict[str, Any] = {"directory": None, "files": []}
        if getattr(args, "out", None):
            state["directory"] = Path(args.out)
        try:
            return command(args, state)
        except ConfigError as e:
            logger.error(f"Configuration error: {e}")
            code = EXIT_CONFIG
            error: Exception = e
        except NumericError as e:
            logger.error(f"Numeric failure ({type(e).__name__}): {e}")
            code = EXIT_NUMERIC
            error = e
        except EfritMpcError as e:
            logger.error(f"{type(e).__name__}: {e}")
            code = EXIT_FAILURE
            error = e
        except Exception as e:
            logger.exception(f"Unexpected error in '{args.command}': {e}")
            code = EXIT_FAILURE
            error = e
        _write_error_record(state["directory"], args.command, error, state["files"])
        return code

    return run


def _load(
    args: argparse.Namespace, state: dict[str, Any]
) -> tuple["ScenarioConfig", "RunOutputs"]:
    from efrit_mpc.core.scenario import RunOutputs, load_scenario

    cfg = load_scenario(args.config, _overrides(args))
    outputs = RunOutputs(cfg.output_dir)
    state["directory"] = outputs.directory
    state["files"] = outputs.files
    return cfg, outputs


def tune_command(args: argparse.Namespace, state: dict[str, Any]) -> int:
    """Log (or replay) the record and tune [Kp, Ki, Kd, Tc].

    Args:
        args: Command-line arguments
        state: Error-reporting state shared with the guard

    Returns:
        Exit code
    """
    from efrit_mpc.core.scenario import tune_scenario

    cfg, outputs = _load(args, state)
    outcome = tune_scenario(cfg, outputs)
    print(f"theta* = {outcome.theta.as_list()}")
    print(f"J_EF   = {outcome.j_star:.6g}")
    if outcome.tuning is not None and outcome.tuning.stalled:
        print("Warning: optimizer stalled; best iterate returned")
    return EXIT_OK


def run_command(args: argparse.Namespace, state: dict[str, Any]) -> int:
    """Run a scenario end to end.

    Args:
        args: Command-line arguments
        state: Error-reporting state shared with the guard

    Returns:
        Exit code
    """
    from efrit_mpc.core.scenario import run_scenario

    cfg, outputs = _load(args, state)
    report = run_scenario(cfg, outputs)
    if config.get("archive.enabled", False):
        from efrit_mpc.data.archive import archive_report

        archive_report(report)
    print(json.dumps(report.metrics, indent=2, sort_keys=True))
    print(f"Outputs written to {report.output_dir}")
    return EXIT_OK


def sweep_command(args: argparse.Namespace, state: dict[str, Any]) -> int:
    """Run a scenario once per set of --vary values.

    Args:
        args: Command-line arguments
        state: Error-reporting state shared with the guard

    Returns:
        Exit code (nonzero when any run failed)
    """
    from efrit_mpc.core.scenario import run_sweep

    cfg, _ = _load(args, state)
    sweep = run_sweep(cfg, _sweep_overrides(args.vary or []), workers=args.workers)
    if config.get("archive.enabled", False):
        from efrit_mpc.data.archive import archive_report

        for run in sweep.runs:
            if run.report is not None:
                archive_report(run.report)
    for row in sweep.table:
        print(
            f"{row['name']}: {row['status']} "
            f"rmse_proposed={row['rmse_proposed']} "
            f"rmse_conventional={row['rmse_conventional']} {row['overrides']}"
        )
    if not sweep.failed:
        return EXIT_OK
    types = {run.error_type for run in sweep.failed}
    return EXIT_CONFIG if types == {"ConfigError"} else EXIT_NUMERIC


def bode_command(args: argparse.Namespace, state: dict[str, Any]) -> int:
    """Tune (or take an override) and compare the loop response with the PL model.

    Args:
        args: Command-line arguments
        state: Error-reporting state shared with the guard

    Returns:
        Exit code
    """
    from efrit_mpc.core.scenario import bode_scenario, tune_scenario

    cfg, outputs = _load(args, state)
    outcome = tune_scenario(cfg, outputs)
    rows = bode_scenario(cfg, outputs, outcome.theta)
    print("freq_hz  gain_db_loop  phase_deg_loop  gain_db_pl  phase_deg_pl")
    for row in rows:
        print(
            f"{row['freq_hz']:7.4g}  {row['gain_db_loop']:12.4f}  "
            f"{row['phase_deg_loop']:14.3f}  {row['gain_db_pl']:10.4f}  "
            f"{row['phase_deg_pl']:12.3f}"
        )
    return EXIT_OK


def history_command(args: argparse.Namespace, state: dict[str, Any]) -> int:
    """Print archived runs.

    Args:
        args: Command-line arguments
        state: Error-reporting state shared with the guard

    Returns:
        Exit code
    """
    from sqlalchemy.exc import SQLAlchemyError

    from efrit_mpc.data.archive import RunArchive

    try:
        with RunArchive(args.db) as archive:
            rows = archive.history(args.scenario, args.limit)
    except (SQLAlchemyError, OSError) as e:
        logger.error(f"Could not read the archive: {e}")
        return EXIT_FAILURE

    if args.format == "json":
        print(json.dumps(rows, indent=2))
    elif not rows:
        print("No archived runs")
    else:
        for row in rows:
            print(
                f"#{row['id']} {row['created_at']} {row['scenario']} "
                f"[{row['status']}] rmse_proposed={row['rmse_proposed']} "
                f"rmse_conventional={row['rmse_conventional']} theta={row['theta']}"
            )
    return EXIT_OK


def scenarios_command(args: argparse.Namespace, state: dict[str, Any]) -> int:
    """List bundled scenarios."""
    from efrit_mpc.core.scenario import list_bundled_scenarios

    for name in list_bundled_scenarios():
        print(name)
    return EXIT_OK


def _add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        required=True,
        help="Scenario YAML file or bundled scenario name",
    )
    parser.add_argument("--seed", type=int, help="Seed for every stochastic choice")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument(
        "--theta-override",
        metavar="KP,KI,KD,TC",
        help="Skip tuning and use these parameters",
    )
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="Override a scenario key, e.g. mpc.q=1000 (repeatable)",
    )


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the application.

    Args:
        argv: Command-line arguments

    Returns:
        Exit code
    """
    parser = argparse.ArgumentParser(
        description="Data-driven PID/PL-model tuning with predictive control"
    )
    parser.add_argument("--settings", help="Application settings YAML file")
    parser.add_argument("--log-level", help="Logging level (default from settings)")
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    tune_parser = subparsers.add_parser("tune", help="Tune PID gains and PL model")
    _add_scenario_arguments(tune_parser)
    tune_parser.set_defaults(func=_guarded(tune_command))

    run_parser = subparsers.add_parser("run", help="Run a scenario end to end")
    _add_scenario_arguments(run_parser)
    run_parser.set_defaults(func=_guarded(run_command))

    sweep_parser = subparsers.add_parser("sweep", help="Run a scenario sweep")
    _add_scenario_arguments(sweep_parser)
    sweep_parser.add_argument(
        "--vary",
        action="append",
        metavar="KEY=V1,V2,...",
        help="Values per run; several --vary lists are zipped",
    )
    sweep_parser.add_argument(
        "--workers", type=int, default=1, help="Runs executed concurrently"
    )
    sweep_parser.set_defaults(func=_guarded(sweep_command))

    bode_parser = subparsers.add_parser(
        "bode", help="Compare the closed-loop response with the PL model"
    )
    _add_scenario_arguments(bode_parser)
    bode_parser.set_defaults(func=_guarded(bode_command))

    history_parser = subparsers.add_parser("history", help="List archived runs")
    history_parser.add_argument("--scenario", help="Only runs of this scenario")
    history_parser.add_argument("--limit", type=int, default=20)
    history_parser.add_argument("--db", help="Database URL (default from settings)")
    history_parser.add_argument(
        "--format",
        choices=["text", "json"],
        default="text",
        help="Output format (default: text)",
    )
    history_parser.set_defaults(func=_guarded(history_command))

    scenarios_parser = subparsers.add_parser("scenarios", help="List bundled scenarios")
    scenarios_parser.set_defaults(func=_guarded(scenarios_command))

    args = parser.parse_args(argv)

    try:
        if args.settings:
            config.load(args.settings)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.log_level:
        config.set("logging.level", args.log_level)
    setup_logging()

    # Run the command
    if hasattr(args, "func"):
        try:
            return_code: int = args.func(args)
        except Exception:
            traceback.print_exc()
            return EXIT_FAILURE
        return return_code
    else:
        parser.print_help()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
