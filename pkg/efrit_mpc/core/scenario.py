"""Scenario configuration and end-to-end runs.

A scenario goes through the full design flow: log one closed-loop record under
the initial gains, tune [Kp, Ki, Kd, Tc] on it, then run the proposed
MPC-over-PL loop next to the conventional PID loop and write per-step CSVs,
the tuning result, an optional Bode comparison and a metrics file.
"""

import copy
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from efrit_mpc.config import config as app_config
from efrit_mpc.config import (
    get_dotted,
    read_yaml_mapping,
    set_dotted,
    update_nested_dict,
)
from efrit_mpc.core.analysis import (
    bode_rows,
    closed_loop_simulator,
    default_freq_grid,
    empirical_freq_response,
    generate_record,
    simulate_conventional,
    simulate_proposed,
)
from efrit_mpc.core.errors import ConfigError, EfritMpcError
from efrit_mpc.core.frit import (
    EfritConfig,
    IoRecord,
    ThetaFull,
    TuningResult,
    cost_decomposition,
    efrit_cost,
    optimize_pl,
)
from efrit_mpc.core.mpc import InputConstraints, MpcWeights
from efrit_mpc.core.plants import (
    BoucWenPlant,
    HammersteinPlant,
    Plant,
    load_boucwen_params,
    sinusoid_reference,
    staircase_reference,
)
from efrit_mpc.core.signals import (
    FloatArray,
    TimeSeries,
    rmse,
    sd,
    settling_samples,
    window,
)
from efrit_mpc.utils.file_utils import (
    format_time,
    read_io_record,
    write_csv,
    write_io_record,
    write_json,
    write_tuning_result,
)

logger = logging.getLogger(__name__)

PLANT_KINDS = ("hammerstein", "boucwen", "csv-replay")
SIMULATOR_KINDS = ("hammerstein", "boucwen")
REFERENCE_KINDS = ("staircase", "sinusoid")

SCENARIO_DEFAULTS: dict[str, Any] = {
    "name": "scenario",
    "plant": {"kind": None, "params_file": None, "saturate": False},
    "record": {"path": None, "simulator": None},
    "reference": {
        "kind": None,
        "steps": None,
        "amp": None,
        "offset": 0.0,
        "freq": None,
        "duration": None,
    },
    "ts": None,
    "tuning": {
        "theta0": None,
        "tc0": None,
        "lambda": None,
        "starts": 8,
        "max_iter": 5000,
        "xatol": 1e-10,
        "fatol": 1e-10,
        "workers": 1,
        "theta_override": None,
    },
    "mpc": {"q": None, "r": None, "v": None, "hp": 5},
    "constraints": {"u_min": None, "u_max": None},
    "solver": {"tol": 1e-9, "max_iter": 2000},
    "noise": {"std": 0.0},
    "metrics": {"window": None},
    "bode": {
        "enabled": False,
        "freqs": None,
        "amp": None,
        "offset": None,
        "settle_periods": 3,
        "measure_periods": 3,
        "workers": 1,
    },
    "seed": 0,
    "output": {"dir": None},
}

_MISSING = object()


# Validation helpers


def _value(raw: dict[str, Any], key: str, default: Any = _MISSING) -> Any:
    value = get_dotted(raw, key, None)
    if value is None:
        if default is _MISSING:
            raise ConfigError(f"Missing required scenario key '{key}'")
        return default
    return value


def _float(raw: dict[str, Any], key: str, default: Any = _MISSING) -> float:
    value = _value(raw, key, default)
    return _as_float(value, key)


def _as_float(value: Any, key: str) -> float:
    # YAML 1.1 reads exponents without a dot (1e-2) as strings.
    if isinstance(value, bool):
        raise ConfigError(f"Scenario key '{key}' must be a number, got {value!r}")
    try:
        result = float(value)
    except (TypeError, ValueError) as e:
        message = f"Scenario key '{key}' must be a number, got {value!r}"
        raise ConfigError(message) from e
    if not math.isfinite(result):
        raise ConfigError(f"Scenario key '{key}' must be finite, got {value!r}")
    return result


def _int(raw: dict[str, Any], key: str, default: Any = _MISSING) -> int:
    value = _float(raw, key, default)
    if value != int(value):
        raise ConfigError(f"Scenario key '{key}' must be an integer, got {value}")
    return int(value)


def _floats(
    raw: dict[str, Any], key: str, length: int | None = None, default: Any = _MISSING
) -> tuple[float, ...] | None:
    value = _value(raw, key, default)
    if value is None:
        return None
    if isinstance(value, str):
        value = value.split(",")
    if not isinstance(value, list | tuple):
        raise ConfigError(f"Scenario key '{key}' must be a list of numbers")
    items = tuple(_as_float(v, key) for v in value)
    if length is not None and len(items) != length:
        raise ConfigError(
            f"Scenario key '{key}' needs {length} values, got {len(items)}"
        )
    return items


def _choice(raw: dict[str, Any], key: str, choices: Sequence[str]) -> str:
    value = _value(raw, key)
    if value not in choices:
        raise ConfigError(f"Scenario key '{key}' must be one of {list(choices)}")
    return str(value)


# Configuration types


@dataclass(frozen=True)
class ReferenceSpec:
    """Reference signal settings."""

    kind: str
    steps: tuple[tuple[float, float], ...] = ()
    amp: float = 0.0
    offset: float = 0.0
    freq: float = 0.0
    duration: float = 0.0


@dataclass(frozen=True)
class BodeSpec:
    """Frequency sweep settings."""

    enabled: bool = False
    freqs: tuple[float, ...] | None = None
    amp: float = 1.0
    offset: float = 0.0
    settle_periods: int = 3
    measure_periods: int = 3
    workers: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario.

    `raw` keeps the merged mapping the scenario was built from so that sweeps
    can apply further overrides.
    """

    name: str
    plant_kind: str
    params_file: str | None
    record_path: str | None
    record_simulator: str | None
    reference: ReferenceSpec
    ts: float
    theta0: tuple[float, float, float]
    tc0: float
    efrit: EfritConfig
    theta_override: ThetaFull | None
    weights: MpcWeights
    constraints: InputConstraints
    saturate_input: bool
    solver_tol: float
    solver_max_iter: int
    noise_std: float
    metrics_window: tuple[float, float] | None
    bode: BodeSpec
    seed: int
    output_dir: Path
    raw: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def simulator_kind(self) -> str | None:
        """Plant used to close loops (None for tune-only record replay)."""
        if self.plant_kind == "csv-replay":
            return self.record_simulator
        return self.plant_kind

    @property
    def actuator(self) -> InputConstraints | None:
        """Input range the plant itself enforces on every loop, if any."""
        return self.constraints if self.saturate_input else None

    def with_overrides(self, overrides: dict[str, Any]) -> "ScenarioConfig":
        """Re-validate the scenario with extra dotted-key overrides."""
        raw = copy.deepcopy(self.raw)
        for key, value in overrides.items():
            set_dotted(raw, key, value)
        return scenario_from_mapping(raw)


def _reference_from(raw: dict[str, Any]) -> ReferenceSpec:
    kind = _choice(raw, "reference.kind", REFERENCE_KINDS)
    if kind == "staircase":
        steps = _value(raw, "reference.steps")
        if not isinstance(steps, list) or not steps:
            raise ConfigError("reference.steps must be a list of [value, duration]")
        pairs = []
        for item in steps:
            if not isinstance(item, list | tuple) or len(item) != 2:
                raise ConfigError("reference.steps entries must be [value, duration]")
            value = _as_float(item[0], "reference.steps")
            duration = _as_float(item[1], "reference.steps")
            if not duration > 0:
                raise ConfigError("reference.steps durations must be positive")
            pairs.append((value, duration))
        return ReferenceSpec(kind=kind, steps=tuple(pairs))
    spec = ReferenceSpec(
        kind=kind,
        amp=_float(raw, "reference.amp"),
        offset=_float(raw, "reference.offset", 0.0),
        freq=_float(raw, "reference.freq"),
        duration=_float(raw, "reference.duration"),
    )
    if not (spec.freq > 0 and spec.duration > 0):
        raise ConfigError("reference.freq and reference.duration must be positive")
    return spec


def _bode_from(raw: dict[str, Any], reference: ReferenceSpec) -> BodeSpec:
    default_amp = reference.amp if reference.kind == "sinusoid" else 1.0
    spec = BodeSpec(
        enabled=bool(_value(raw, "bode.enabled", False)),
        freqs=_floats(raw, "bode.freqs", default=None),
        amp=_float(raw, "bode.amp", default_amp),
        offset=_float(raw, "bode.offset", reference.offset),
        settle_periods=_int(raw, "bode.settle_periods", 3),
        measure_periods=_int(raw, "bode.measure_periods", 3),
        workers=_int(raw, "bode.workers", 1),
    )
    if spec.settle_periods < 2 or spec.measure_periods < 1:
        raise ConfigError("bode.settle_periods must be >= 2, bode.measure_periods >= 1")
    return spec


def scenario_from_mapping(data: dict[str, Any]) -> ScenarioConfig:
    """Validate a scenario mapping (nested or with dotted top-level keys).

    Raises:
        ConfigError: For missing keys, unknown kinds or invalid values
    """
    raw = copy.deepcopy(SCENARIO_DEFAULTS)
    nested: dict[str, Any] = {}
    for key, value in data.items():
        if "." in key:
            set_dotted(nested, key, value)
        else:
            update_nested_dict(nested, {key: copy.deepcopy(value)})
    update_nested_dict(raw, nested)

    name = str(_value(raw, "name"))
    plant_kind = _choice(raw, "plant.kind", PLANT_KINDS)
    record_path = _value(raw, "record.path", None)
    record_simulator = _value(raw, "record.simulator", None)
    if plant_kind == "csv-replay":
        if record_path is None:
            raise ConfigError("csv-replay scenarios need record.path")
        if record_simulator is not None and record_simulator not in SIMULATOR_KINDS:
            raise ConfigError(f"record.simulator must be one of {SIMULATOR_KINDS}")
    reference = _reference_from(raw)
    ts = _float(raw, "ts")
    if not ts > 0:
        raise ConfigError(f"ts must be positive, got {ts}")

    theta0 = _floats(raw, "tuning.theta0", length=3)
    assert theta0 is not None
    tc0 = _float(raw, "tuning.tc0", 10.0 * ts)
    override = _floats(raw, "tuning.theta_override", length=4, default=None)
    window_keys = _floats(raw, "metrics.window", length=2, default=None)

    try:
        efrit = EfritConfig(
            lambda_=_float(raw, "tuning.lambda"),
            starts=_int(raw, "tuning.starts"),
            max_iter=_int(raw, "tuning.max_iter"),
            xatol=_float(raw, "tuning.xatol"),
            fatol=_float(raw, "tuning.fatol"),
            seed=_int(raw, "seed"),
            workers=_int(raw, "tuning.workers"),
        )
        weights = MpcWeights(
            q=_float(raw, "mpc.q"),
            r=_float(raw, "mpc.r"),
            v=_float(raw, "mpc.v"),
            hp=_int(raw, "mpc.hp"),
        )
        constraints = InputConstraints(
            u_min=_float(raw, "constraints.u_min"),
            u_max=_float(raw, "constraints.u_max"),
        )
        theta_override = ThetaFull.from_list(override) if override else None
        if not tc0 > 0:
            raise ValueError(f"tuning.tc0 must be positive, got {tc0}")
    except ValueError as e:
        raise ConfigError(str(e)) from e

    saturate = _value(raw, "plant.saturate", False)
    if not isinstance(saturate, bool):
        raise ConfigError(f"plant.saturate must be true or false, got {saturate!r}")
    noise_std = _float(raw, "noise.std", 0.0)
    if noise_std < 0:
        raise ConfigError("noise.std must be non-negative")
    output_dir = _value(raw, "output.dir", None)
    if output_dir is None:
        output_dir = Path(app_config.get("output.dir", "results")) / name

    return ScenarioConfig(
        name=name,
        plant_kind=plant_kind,
        params_file=_value(raw, "plant.params_file", None),
        record_path=record_path,
        record_simulator=record_simulator,
        reference=reference,
        ts=ts,
        theta0=(theta0[0], theta0[1], theta0[2]),
        tc0=tc0,
        efrit=efrit,
        theta_override=theta_override,
        weights=weights,
        constraints=constraints,
        saturate_input=saturate,
        solver_tol=_float(raw, "solver.tol"),
        solver_max_iter=_int(raw, "solver.max_iter"),
        noise_std=noise_std,
        metrics_window=(window_keys[0], window_keys[1]) if window_keys else None,
        bode=_bode_from(raw, reference),
        seed=efrit.seed,
        output_dir=Path(output_dir),
        raw=raw,
    )


def list_bundled_scenarios() -> list[str]:
    """Names of the scenario files shipped with the package."""
    root = resources.files("efrit_mpc.scenarios")
    return sorted(
        p.name.removesuffix(".yaml") for p in root.iterdir() if p.name.endswith(".yaml")
    )


def load_scenario(
    source: str | Path, overrides: dict[str, Any] | None = None
) -> ScenarioConfig:
    """Load a scenario from a YAML path or by bundled name.

    Args:
        source: Path to a YAML file, or a bundled name such as `hammerstein_case1`
        overrides: Dotted-key overrides applied after loading

    Returns:
        Validated scenario

    Raises:
        ConfigError: If the scenario cannot be found or does not validate
    """
    path = Path(source)
    if path.exists():
        data = read_yaml_mapping(path)
    elif str(source) in list_bundled_scenarios():
        ref = resources.files("efrit_mpc.scenarios").joinpath(f"{source}.yaml")
        with resources.as_file(ref) as bundled:
            data = read_yaml_mapping(bundled)
    else:
        raise ConfigError(
            f"No scenario file or bundled scenario named '{source}' "
            f"(bundled: {', '.join(list_bundled_scenarios())})"
        )
    for key, value in (overrides or {}).items():
        set_dotted(data, key, value)
    return scenario_from_mapping(data)


# Runs


@dataclass
class RunOutputs:
    """Output directory of one run and the files written so far."""

    directory: Path
    files: list[Path] = field(default_factory=list)

    def path(self, name: str) -> Path:
        """Register a file about to be written and return its path."""
        self.directory.mkdir(parents=True, exist_ok=True)
        target = self.directory / name
        self.files.append(target)
        return target

    def written(self, target: Path) -> None:
        """Log a finished file."""
        logger.info(f"Wrote {target}")


@dataclass
class Report:
    """Outcome of one scenario run."""

    name: str
    output_dir: Path
    theta: ThetaFull
    j_star: float
    metrics: dict[str, Any]
    files: list[Path]
    seed: int
    lambda_: float
    tuning: TuningResult | None = None
    status: str = "ok"


@dataclass(frozen=True)
class TuningOutcome:
    """Record and tuned parameters of a scenario."""

    record: IoRecord
    theta: ThetaFull
    j_star: float
    tuning: TuningResult | None


def make_plant(kind: str, params_file: str | None = None) -> Plant[Any]:
    """Instantiate a simulator by kind."""
    if kind == "hammerstein":
        return HammersteinPlant()
    if kind == "boucwen":
        return BoucWenPlant(load_boucwen_params(params_file))
    raise ConfigError(f"Unknown plant kind '{kind}'")


def make_reference(spec: ReferenceSpec, ts: float) -> TimeSeries:
    """Sample the configured reference."""
    if spec.kind == "staircase":
        return staircase_reference(spec.steps, ts)
    return sinusoid_reference(spec.amp, spec.offset, spec.freq, spec.duration, ts)


def _noise(rng: np.random.Generator, std: float, n: int) -> FloatArray | None:
    # Always draw so later streams do not depend on whether noise is enabled.
    draw = rng.standard_normal(n)
    return std * draw if std > 0 else None


def tune_scenario(
    cfg: ScenarioConfig, outputs: RunOutputs, rng: np.random.Generator | None = None
) -> TuningOutcome:
    """Obtain the record (logged or replayed) and the tuned parameters.

    A configured theta override skips the optimizer; its cost is still
    evaluated on the record.
    """
    rng = rng or np.random.default_rng(cfg.seed)
    if cfg.plant_kind == "csv-replay":
        assert cfg.record_path is not None
        record = read_io_record(cfg.record_path, cfg.theta0)
        if not math.isclose(record.ts, cfg.ts, rel_tol=1e-6):
            raise ConfigError(
                f"Record sampling time {record.ts:g} differs from ts={cfg.ts:g}"
            )
    else:
        plant = make_plant(cfg.plant_kind, cfg.params_file)
        r = make_reference(cfg.reference, cfg.ts)
        gains0 = ThetaFull(*cfg.theta0, cfg.tc0).gains(cfg.ts)
        noise = _noise(rng, cfg.noise_std, len(r))
        record = generate_record(plant, gains0, r, noise, saturation=cfg.actuator)
    target = outputs.path("record.csv")
    write_io_record(target, record)
    outputs.written(target)

    if cfg.theta_override is not None:
        theta = cfg.theta_override
        j_star = efrit_cost(record, theta, cfg.efrit.lambda_)
        logger.info(f"Using theta override {theta.as_list()} (J_EF={j_star:.6g})")
        return TuningOutcome(record=record, theta=theta, j_star=j_star, tuning=None)

    th0 = ThetaFull(*cfg.theta0, cfg.tc0)
    tuning = optimize_pl(record, th0, cfg.efrit)
    target = outputs.path("tuning_result.yaml")
    write_tuning_result(target, tuning)
    outputs.written(target)
    return TuningOutcome(
        record=record, theta=tuning.theta, j_star=tuning.cost, tuning=tuning
    )


def bode_scenario(
    cfg: ScenarioConfig, outputs: RunOutputs, theta: ThetaFull
) -> list[dict[str, float]]:
    """Compare the tuned PID loop's describing response with the PL model."""
    kind = cfg.simulator_kind
    if kind is None:
        raise ConfigError("A Bode comparison needs a plant or record.simulator")
    plant = make_plant(kind, cfg.params_file)
    nyquist = 0.5 / cfg.ts
    freqs = list(cfg.bode.freqs) if cfg.bode.freqs else default_freq_grid()
    kept = [f for f in freqs if 0 < f < nyquist]
    if len(kept) < len(freqs):
        logger.warning(
            f"Dropped {len(freqs) - len(kept)} Bode frequencies at or above "
            f"Nyquist ({nyquist:g} Hz)"
        )
    points = empirical_freq_response(
        closed_loop_simulator(plant, theta.gains(cfg.ts), cfg.actuator),
        kept,
        cfg.bode.amp,
        cfg.bode.offset,
        cfg.bode.settle_periods,
        cfg.bode.measure_periods,
        cfg.ts,
        workers=cfg.bode.workers,
    )
    rows = bode_rows(points, theta.pl(cfg.ts))
    target = outputs.path("bode.csv")
    write_csv(target, rows)
    outputs.written(target)
    return rows


def _error_metrics(
    prefix: str, y: TimeSeries, r: TimeSeries, window_s: tuple[float, float] | None
) -> dict[str, float]:
    err = r - y
    metrics = {f"rmse_{prefix}": rmse(y, r), f"sd_{prefix}": sd(err)}
    if window_s is not None:
        y_w, r_w = window(y, *window_s), window(r, *window_s)
        if len(y_w) == 0:
            raise ConfigError(f"metrics.window {list(window_s)} selects no samples")
        metrics[f"rmse_{prefix}_window"] = rmse(y_w, r_w)
        metrics[f"sd_{prefix}_window"] = sd(r_w - y_w)
    return metrics


def _max_violation(u: TimeSeries, c: InputConstraints) -> float:
    over = np.maximum(u.values - c.u_max, c.u_min - u.values)
    return float(max(over.max(), 0.0))


def run_scenario(cfg: ScenarioConfig, outputs: RunOutputs | None = None) -> Report:
    """Run the full design flow for one scenario.

    Args:
        cfg: Validated scenario
        outputs: Output tracker; files already written stay listed there when
            a later stage fails

    Returns:
        Report with metrics and written files

    Raises:
        ConfigError: For inconsistent settings discovered while running
        NumericError: When a numeric stage fails
    """
    outputs = outputs or RunOutputs(cfg.output_dir)
    logger.info(f"Scenario '{cfg.name}' started (seed {cfg.seed})")
    rng = np.random.default_rng(cfg.seed)
    tuned = tune_scenario(cfg, outputs, rng)
    theta = tuned.theta

    metrics: dict[str, Any] = {
        "theta_star": theta.as_list(),
        "j_star": tuned.j_star,
    }
    j_f, penalty = cost_decomposition(tuned.record, theta, cfg.efrit.lambda_)
    total = j_f + penalty
    metrics["penalty_share"] = penalty / total if total > 0 else 0.0

    kind = cfg.simulator_kind
    if kind is None:
        logger.info(f"Scenario '{cfg.name}' replays a record only; no loops simulated")
    else:
        plant = make_plant(kind, cfg.params_file)
        r = make_reference(cfg.reference, cfg.ts)
        noise_p = _noise(rng, cfg.noise_std, len(r))
        noise_c = _noise(rng, cfg.noise_std, len(r))
        proposed = simulate_proposed(
            plant,
            theta,
            cfg.weights,
            cfg.constraints,
            r,
            tol=cfg.solver_tol,
            max_iter=cfg.solver_max_iter,
            noise=noise_p,
        )
        conventional = simulate_conventional(
            plant,
            theta.gains(cfg.ts),
            r,
            tc=theta.tc,
            noise=noise_c,
            saturation=cfg.actuator,
        )
        target = outputs.path("proposed.csv")
        write_csv(
            target,
            [
                {
                    "t": format_time(t),
                    "r": float(r.values[k]),
                    "y": float(proposed.y.values[k]),
                    "v": float(proposed.v.values[k]),
                    "u": float(proposed.u.values[k]),
                    "cost": d.cost,
                    "qp_status": d.status.value,
                    "qp_iters": d.iterations,
                }
                for k, (t, d) in enumerate(zip(r.times, proposed.diagnostics))
            ],
        )
        outputs.written(target)
        assert conventional.y_m is not None
        target = outputs.path("conventional.csv")
        write_csv(
            target,
            [
                {
                    "t": format_time(t),
                    "r": float(r.values[k]),
                    "y": float(conventional.y.values[k]),
                    "u": float(conventional.u.values[k]),
                    "y_m": float(conventional.y_m.values[k]),
                }
                for k, t in enumerate(r.times)
            ],
        )
        outputs.written(target)

        metrics.update(_error_metrics("proposed", proposed.y, r, cfg.metrics_window))
        metrics.update(
            _error_metrics("conventional", conventional.y, r, cfg.metrics_window)
        )
        metrics["max_input_violation"] = _max_violation(proposed.u, cfg.constraints)
        if cfg.reference.kind == "staircase":
            metrics["settling_proposed"] = settling_samples(proposed.y, r)
            metrics["settling_conventional"] = settling_samples(conventional.y, r)
        logger.info(
            f"Scenario '{cfg.name}': RMSE proposed {metrics['rmse_proposed']:.4g}, "
            f"conventional {metrics['rmse_conventional']:.4g}"
        )

    if cfg.bode.enabled:
        bode_scenario(cfg, outputs, theta)

    target = outputs.path("metrics.json")
    write_json(target, metrics)
    outputs.written(target)
    logger.info(f"Scenario '{cfg.name}' finished")
    return Report(
        name=cfg.name,
        output_dir=outputs.directory,
        theta=theta,
        j_star=tuned.j_star,
        metrics=metrics,
        files=list(outputs.files),
        seed=cfg.seed,
        lambda_=cfg.efrit.lambda_,
        tuning=tuned.tuning,
    )


# Sweeps


@dataclass
class SweepRun:
    """One entry of a sweep: its overrides and either a report or an error."""

    name: str
    overrides: dict[str, Any]
    report: Report | None = None
    error: str | None = None
    error_type: str | None = None
    partial_outputs: list[Path] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """True when the run finished."""
        return self.report is not None


@dataclass
class SweepReport:
    """All runs of a sweep and their comparison table."""

    runs: list[SweepRun]
    table: list[dict[str, Any]]
    output_dir: Path

    @property
    def failed(self) -> list[SweepRun]:
        """Runs that raised."""
        return [run for run in self.runs if not run.ok]


COMPARISON_COLUMNS = [
    "name",
    "overrides",
    "status",
    "rmse_proposed",
    "rmse_conventional",
    "sd_proposed",
    "sd_conventional",
    "j_star",
    "penalty_share",
    "settling_proposed",
    "settling_conventional",
    "error",
]


def _sweep_one(base: ScenarioConfig, name: str, overrides: dict[str, Any]) -> SweepRun:
    run = SweepRun(name=name, overrides=overrides)
    outputs = RunOutputs(base.output_dir / name)
    try:
        cfg = base.with_overrides(
            {
                **overrides,
                "name": f"{base.name}/{name}",
                "output.dir": str(outputs.directory),
            }
        )
        run.report = run_scenario(cfg, outputs)
    except EfritMpcError as e:
        logger.error(f"Sweep run '{name}' failed: {e}")
        run.error = str(e)
        run.error_type = type(e).__name__
        run.partial_outputs = list(outputs.files)
    return run


def _comparison_row(run: SweepRun) -> dict[str, Any]:
    row: dict[str, Any] = {
        "name": run.name,
        "overrides": ";".join(f"{k}={v}" for k, v in run.overrides.items()),
        "status": "ok" if run.ok else "failed",
        "error": run.error or "",
    }
    metrics = run.report.metrics if run.report else {}
    for column in COMPARISON_COLUMNS:
        if column in row:
            continue
        value = metrics.get(column, "")
        if isinstance(value, list):
            value = " ".join(str(v) for v in value)
        row[column] = value
    return row


def run_sweep(
    base: ScenarioConfig,
    overrides: Sequence[dict[str, Any]],
    workers: int = 1,
) -> SweepReport:
    """Run the base scenario once per override set.

    Each run writes into its own sub-directory of the base output directory;
    one failing run does not stop the others. An empty override list runs the
    base scenario once.

    Args:
        base: Base scenario
        overrides: Dotted-key overrides per run
        workers: Runs executed concurrently

    Returns:
        Sweep report with a comparison table (also written as sweep.csv and
        sweep.json)
    """
    sets = list(overrides) or [{}]
    names = [f"run_{i:02d}" for i in range(len(sets))]
    logger.info(f"Sweep over {len(sets)} runs of '{base.name}'")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_sweep_one, base, n, o) for n, o in zip(names, sets)
            ]
            runs = [f.result() for f in futures]
    else:
        runs = [_sweep_one(base, n, o) for n, o in zip(names, sets)]

    table = [_comparison_row(run) for run in runs]
    outputs = RunOutputs(base.output_dir)
    target = outputs.path("sweep.csv")
    write_csv(target, table, fieldnames=COMPARISON_COLUMNS)
    outputs.written(target)
    target = outputs.path("sweep.json")
    write_json(target, table)
    outputs.written(target)
    return SweepReport(runs=runs, table=table, output_dir=base.output_dir)

