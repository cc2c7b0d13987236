"""End-to-end scenario runs."""

import copy
import math
from pathlib import Path
from typing import Any

import pytest
import yaml

from efrit_mpc.core.errors import ConfigError
from efrit_mpc.core.frit import ThetaFull, efrit_cost
from efrit_mpc.core.scenario import (
    RunOutputs,
    bode_scenario,
    list_bundled_scenarios,
    load_scenario,
    run_scenario,
    run_sweep,
    scenario_from_mapping,
    tune_scenario,
)
from efrit_mpc.utils.file_utils import read_csv, read_json

HAMMERSTEIN_THETA = [4.71e-9, 9.09e-1, 3.68e-11, 0.81]
BOUCWEN_THETA = [1.30e-1, 1.51, 6.29e-1, 7.10e-2]
OVERRIDE = [0.05, 0.05, 0.005, 3.0]


def test_bundled_scenarios_validate(tmp_path: Path) -> None:
    """Test that every shipped scenario loads."""
    names = list_bundled_scenarios()
    assert names == [
        "boucwen_sin",
        "boucwen_sin_rweight",
        "boucwen_square",
        "hammerstein_case1",
        "hammerstein_case2",
    ]
    for name in names:
        cfg = load_scenario(name, {"output.dir": str(tmp_path / name)})
        assert cfg.name == name
        assert cfg.tc0 == pytest.approx(10.0 * cfg.ts)

    case1 = load_scenario("hammerstein_case1")
    assert case1.weights.q == 1000.0
    assert case1.efrit.lambda_ == 1000.0
    sin = load_scenario("boucwen_sin")
    assert sin.bode.enabled
    assert sin.bode.amp == 25.0
    assert sin.actuator == sin.constraints
    assert case1.actuator is None


def test_scenario_validation(fast_scenario: dict[str, Any]) -> None:
    """Test rejected scenario mappings."""
    cases = [
        ("plant", {"kind": "pendulum"}),
        ("ts", -1.0),
        ("mpc", {"q": 1.0, "r": 0.0, "v": 0.0}),
        ("constraints", {"u_min": 2.0, "u_max": 0.0}),
        ("reference", {"kind": "staircase", "steps": [[1.0]]}),
        ("tuning", {"theta0": [1.0, 2.0], "lambda": 1.0}),
        ("plant", {"kind": "hammerstein", "saturate": "yes"}),
    ]
    for key, value in cases:
        data = copy.deepcopy(fast_scenario)
        data[key] = value
        with pytest.raises(ConfigError):
            scenario_from_mapping(data)

    data = copy.deepcopy(fast_scenario)
    del data["ts"]
    with pytest.raises(ConfigError):
        scenario_from_mapping(data)

    data = copy.deepcopy(fast_scenario)
    data["plant"] = {"kind": "csv-replay"}
    with pytest.raises(ConfigError):
        scenario_from_mapping(data)

    with pytest.raises(ConfigError):
        load_scenario("no_such_scenario")


def test_dotted_keys_and_string_numbers(fast_scenario: dict[str, Any]) -> None:
    """Test flat dotted keys and exponents read as strings."""
    data = copy.deepcopy(fast_scenario)
    del data["mpc"]
    data.update({"mpc.q": "1e3", "mpc.r": 0, "mpc.v": 1})
    data["tuning.theta_override"] = "1,2,3,4"
    cfg = scenario_from_mapping(data)
    assert cfg.weights.q == 1000.0
    assert cfg.weights.hp == 5
    assert cfg.theta_override == ThetaFull(1.0, 2.0, 3.0, 4.0)

    changed = cfg.with_overrides({"mpc.hp": 3, "noise.std": 0.1})
    assert changed.weights.hp == 3
    assert changed.noise_std == 0.1
    assert cfg.weights.hp == 5


def test_run_with_theta_override(fast_scenario: dict[str, Any]) -> None:
    """Test a full run that skips the optimizer."""
    fast_scenario["tuning"]["theta_override"] = OVERRIDE
    cfg = scenario_from_mapping(fast_scenario)
    report = run_scenario(cfg)

    names = sorted(p.name for p in report.files)
    assert names == ["conventional.csv", "metrics.json", "proposed.csv", "record.csv"]
    assert report.tuning is None
    assert report.theta.as_list() == OVERRIDE

    metrics = read_json(cfg.output_dir / "metrics.json")
    assert metrics["theta_star"] == OVERRIDE
    assert metrics["max_input_violation"] <= 1e-6
    assert len(metrics["settling_proposed"]) == 3
    assert 0.0 <= metrics["penalty_share"] <= 1.0

    rows = read_csv(cfg.output_dir / "proposed.csv")
    assert len(rows) == 60
    assert list(rows[0]) == ["t", "r", "y", "v", "u", "cost", "qp_status", "qp_iters"]
    for row in rows:
        assert -1e-6 <= float(row["u"]) <= 2.0 + 1e-6
    conventional = read_csv(cfg.output_dir / "conventional.csv")
    assert list(conventional[0]) == ["t", "r", "y", "u", "y_m"]


def test_runs_are_reproducible(fast_scenario: dict[str, Any], tmp_path: Path) -> None:
    """Test byte-identical outputs for identical seeds."""
    fast_scenario["noise"] = {"std": 0.01}
    first = scenario_from_mapping(fast_scenario)
    second = first.with_overrides({"output.dir": str(tmp_path / "again")})
    run_scenario(first)
    run_scenario(second)
    for name in ("record.csv", "proposed.csv", "metrics.json", "tuning_result.yaml"):
        assert (first.output_dir / name).read_bytes() == (
            second.output_dir / name
        ).read_bytes()


def test_tuning_improves_on_initial_cost(fast_scenario: dict[str, Any]) -> None:
    """Test that the tuned cost never exceeds the starting cost."""
    cfg = scenario_from_mapping(fast_scenario)
    outcome = tune_scenario(cfg, RunOutputs(cfg.output_dir))
    th0 = ThetaFull(*cfg.theta0, cfg.tc0)
    assert outcome.j_star <= efrit_cost(outcome.record, th0, cfg.efrit.lambda_)
    saved = yaml.safe_load((cfg.output_dir / "tuning_result.yaml").read_text())
    assert saved["cost"] == pytest.approx(outcome.j_star)
    assert len(saved["starts"]) == 2


def test_record_replay(fast_scenario: dict[str, Any], tmp_path: Path) -> None:
    """Test tuning from a logged CSV record."""
    logged = scenario_from_mapping(fast_scenario)
    tune_scenario(logged, RunOutputs(logged.output_dir))
    record_path = str(logged.output_dir / "record.csv")

    replay = copy.deepcopy(fast_scenario)
    replay["plant"] = {"kind": "csv-replay"}
    replay["record"] = {"path": record_path}
    replay["output"] = {"dir": str(tmp_path / "replay")}
    report = run_scenario(scenario_from_mapping(replay))
    assert "rmse_proposed" not in report.metrics
    assert sorted(p.name for p in report.files) == [
        "metrics.json",
        "record.csv",
        "tuning_result.yaml",
    ]

    replay["record"]["simulator"] = "hammerstein"
    replay["output"] = {"dir": str(tmp_path / "replay_sim")}
    replay["tuning"]["theta_override"] = OVERRIDE
    closed = run_scenario(scenario_from_mapping(replay))
    assert "rmse_proposed" in closed.metrics

    replay["ts"] = 0.5
    with pytest.raises(ConfigError):
        run_scenario(scenario_from_mapping(replay))


def test_sweep_isolates_failures(fast_scenario: dict[str, Any]) -> None:
    """Test that one bad run leaves the others intact."""
    fast_scenario["tuning"]["theta_override"] = OVERRIDE
    base = scenario_from_mapping(fast_scenario)
    sweep = run_sweep(base, [{"mpc.q": 10.0}, {"mpc.v": -1.0}, {"mpc.q": 100.0}])

    assert [run.ok for run in sweep.runs] == [True, False, True]
    assert sweep.failed[0].error_type == "ConfigError"
    assert (base.output_dir / "run_00" / "metrics.json").exists()
    assert (base.output_dir / "run_02" / "metrics.json").exists()
    table = read_csv(base.output_dir / "sweep.csv")
    assert [row["status"] for row in table] == ["ok", "failed", "ok"]
    assert table[0]["overrides"] == "mpc.q=10.0"
    assert read_json(base.output_dir / "sweep.json")[1]["error"]


def test_bode_drops_frequencies_above_nyquist(fast_scenario: dict[str, Any]) -> None:
    """Test the Bode comparison on a unit-sampled loop."""
    fast_scenario["tuning"]["theta_override"] = OVERRIDE
    fast_scenario["bode"] = {"enabled": True, "freqs": [0.05, 0.1, 0.6]}
    cfg = scenario_from_mapping(fast_scenario)
    rows = bode_scenario(cfg, RunOutputs(cfg.output_dir), cfg.theta_override)
    assert [row["freq_hz"] for row in rows] == [0.05, 0.1]
    assert (cfg.output_dir / "bode.csv").exists()


# Long reference runs; run with `pytest -m slow`.


@pytest.mark.slow
def test_hammerstein_fixed_theta(tmp_path: Path) -> None:
    """Test tracking errors of the published Hammerstein tuning.

    Errors are counted from k = 0 against the undelayed reference, so the
    first sample alone (y = 0, r = 0.5) puts the proposed RMSE above 0.035.
    """
    cfg = load_scenario(
        "hammerstein_case1",
        {"tuning.theta_override": HAMMERSTEIN_THETA, "output.dir": str(tmp_path)},
    )
    metrics = run_scenario(cfg).metrics
    assert 0.05 <= metrics["rmse_proposed"] <= 0.09
    assert 0.10 <= metrics["rmse_conventional"] <= 0.15
    assert metrics["rmse_proposed"] < 0.7 * metrics["rmse_conventional"]
    assert metrics["max_input_violation"] <= 1e-6


@pytest.mark.slow
def test_hammerstein_tuning_dominates(tmp_path: Path) -> None:
    """Test the tuned cost against the published tuning on the same record."""
    cfg = load_scenario("hammerstein_case1", {"output.dir": str(tmp_path)})
    report = run_scenario(cfg)
    assert report.tuning is not None
    record = tune_scenario(cfg, RunOutputs(tmp_path / "again")).record
    published = efrit_cost(
        record, ThetaFull.from_list(HAMMERSTEIN_THETA), cfg.efrit.lambda_
    )
    assert report.j_star <= 1.05 * published
    assert report.metrics["rmse_proposed"] < report.metrics["rmse_conventional"]


@pytest.mark.slow
def test_boucwen_fixed_theta(tmp_path: Path) -> None:
    """Test the published Bouc-Wen tuning against the saturated PID loop."""
    cfg = load_scenario(
        "boucwen_sin",
        {
            "tuning.theta_override": BOUCWEN_THETA,
            "bode.enabled": False,
            "output.dir": str(tmp_path),
        },
    )
    metrics = run_scenario(cfg).metrics
    assert math.isfinite(metrics["rmse_proposed"])
    assert math.isfinite(metrics["rmse_conventional"])
    assert metrics["rmse_proposed"] < metrics["rmse_conventional"]
    assert metrics["max_input_violation"] <= 1e-6
    applied = [float(row["u"]) for row in read_csv(tmp_path / "conventional.csv")]
    assert min(applied) >= 0.0
    assert max(applied) <= 10.0


@pytest.mark.slow
def test_fast_tracking_weights_settle_sooner(tmp_path: Path) -> None:
    """Test that the tracking-weighted case settles every step before the other."""
    fast = run_scenario(
        load_scenario("hammerstein_case1", {"output.dir": str(tmp_path / "1")})
    ).metrics
    smooth = run_scenario(
        load_scenario("hammerstein_case2", {"output.dir": str(tmp_path / "2")})
    ).metrics
    assert len(fast["settling_proposed"]) == len(smooth["settling_proposed"]) == 4
    assert max(fast["settling_proposed"]) < min(smooth["settling_proposed"])
    assert sum(fast["settling_proposed"]) < sum(smooth["settling_proposed"])


@pytest.mark.slow
def test_penalty_share_grows_with_lambda(tmp_path: Path) -> None:
    """Test the weighted input-variation share over a lambda sweep."""
    base = load_scenario("hammerstein_case1", {"output.dir": str(tmp_path)})
    sweep = run_sweep(base, [{"tuning.lambda": lam} for lam in (1e2, 1e3, 1e4)])
    assert not sweep.failed
    shares = [run.report.metrics["penalty_share"] for run in sweep.runs]
    assert all(0.0 <= s <= 1.0 for s in shares)
    assert shares == sorted(shares)



@pytest.mark.slow
def test_boucwen_bode_matches_near_operating_frequency(tmp_path: Path) -> None:
    """Test that the PL model fits the loop better at 0.2 Hz than at 2 Hz."""
    cfg = load_scenario(
        "boucwen_sin", {"bode.freqs": [0.2, 2.0], "output.dir": str(tmp_path)}
    )
    outputs = RunOutputs(cfg.output_dir)
    theta = tune_scenario(cfg, outputs).theta
    low, high = bode_scenario(cfg, outputs, theta)
    assert abs(low["gain_db_loop"] - low["gain_db_pl"]) < abs(
        high["gain_db_loop"] - high["gain_db_pl"]
    )
    assert abs(low["phase_deg_loop"] - low["phase_deg_pl"]) < abs(
        high["phase_deg_loop"] - high["phase_deg_pl"]
    )
