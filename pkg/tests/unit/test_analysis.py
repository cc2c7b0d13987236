"""Tests for closed-loop simulation and empirical frequency responses."""

import math

import numpy as np
import pytest

from efrit_mpc.core.analysis import (
    FreqPoint,
    bode_rows,
    closed_loop_simulator,
    default_freq_grid,
    empirical_freq_response,
    first_harmonic,
    generate_record,
    simulate_conventional,
    simulate_proposed,
)
from efrit_mpc.core.errors import NoConvergence
from efrit_mpc.core.frit import ThetaFull
from efrit_mpc.core.mpc import InputConstraints, MpcWeights
from efrit_mpc.core.pid import PidGains
from efrit_mpc.core.pl_model import pl_from_tc
from efrit_mpc.core.plants import HammersteinPlant, LinearPlant, staircase_reference
from efrit_mpc.core.signals import TimeSeries, apply_filter, freq_response
from tests.conftest import EXACT_TC, INTEGRATOR


def test_zero_reference_stays_at_rest() -> None:
    """Test both loops on a zero reference."""
    r = TimeSeries.zeros(30, 1.0)
    conventional = simulate_conventional(
        HammersteinPlant(), PidGains(0.01, 0.01, 0.001, 1.0), r, tc=2.0
    )
    assert np.all(conventional.y.values == 0.0)
    assert conventional.y_m is not None
    assert np.all(conventional.y_m.values == 0.0)

    proposed = simulate_proposed(
        HammersteinPlant(),
        ThetaFull(0.01, 0.01, 0.001, 2.0),
        MpcWeights(1.0, 0.0, 1.0, 5),
        InputConstraints(0.0, 2.0),
        r,
    )
    np.testing.assert_allclose(proposed.y.values, 0.0, atol=1e-12)
    np.testing.assert_allclose(proposed.u.values, 0.0, atol=1e-12)
    assert len(proposed.diagnostics) == 30


def test_record_includes_noise(staircase: TimeSeries, lag_plant) -> None:
    """Test that the logged output is the measured one."""
    gains = PidGains(0.5, 0.2, 0.0, 1.0)
    noise = np.random.default_rng(11).normal(scale=0.1, size=len(staircase))
    clean = simulate_conventional(lag_plant, gains, staircase, noise=noise)
    rec = generate_record(lag_plant, gains, staircase, noise=noise)
    np.testing.assert_allclose(rec.y0.values - clean.y.values, noise)
    np.testing.assert_allclose(rec.u0.values, clean.u.values)
    with pytest.raises(ValueError):
        generate_record(lag_plant, gains, staircase, noise=noise[:-1])


def test_conventional_saturation(staircase: TimeSeries, lag_plant) -> None:
    """Test that an actuator range clips the applied PID output."""
    gains = PidGains(5.0, 0.5, 1.0, 1.0)
    box = InputConstraints(0.0, 1.5)
    free = simulate_conventional(lag_plant, gains, staircase)
    clipped = simulate_conventional(lag_plant, gains, staircase, saturation=box)
    assert free.u.values.max() > 1.5
    assert clipped.u.values.min() >= 0.0
    assert clipped.u.values.max() == 1.5
    # Unit DC gain: the output cannot pass the top of the box
    assert clipped.y.values.max() <= 1.5 + 1e-12

    rec = generate_record(lag_plant, gains, staircase, saturation=box)
    np.testing.assert_array_equal(rec.u0.values, clipped.u.values)
    np.testing.assert_array_equal(rec.y0.values, clipped.y.values)

    loop = closed_loop_simulator(lag_plant, gains, box)
    np.testing.assert_array_equal(loop(staircase).values, clipped.y.values)


def test_proposed_tracks_with_exact_model(staircase: TimeSeries) -> None:
    """Test offset-free tracking when the PL model matches the loop."""
    run = simulate_proposed(
        LinearPlant(INTEGRATOR),
        ThetaFull(1.0, 0.0, 0.0, EXACT_TC),
        MpcWeights(1.0, 0.0, 0.01, 5),
        InputConstraints(-100.0, 100.0),
        staircase,
    )
    assert run.y.values[25] == pytest.approx(1.0, abs=1e-3)
    assert run.y.values[-1] == pytest.approx(4.0, abs=1e-3)


def test_proposed_converges_geometrically_on_exact_model() -> None:
    """Test geometric error decay when the loop is exactly the PL model."""
    r = TimeSeries(np.ones(200), 1.0)
    run = simulate_proposed(
        LinearPlant(INTEGRATOR),
        ThetaFull(1.0, 0.0, 0.0, EXACT_TC),
        MpcWeights(1.0, 0.0, 0.01, 5),
        InputConstraints(-100.0, 100.0),
        r,
    )
    err = np.abs(r.values - run.y.values)
    assert err[0] == 1.0
    k = np.arange(200)
    envelope = err.max() * 0.85 ** np.maximum(k - 10, 0) + 1e-12
    assert np.all(err <= envelope)
    assert err[-1] < 1e-10


def test_proposed_respects_input_box(staircase: TimeSeries, lag_plant) -> None:
    """Test the applied input against tight limits."""
    run = simulate_proposed(
        lag_plant,
        ThetaFull(0.5, 0.3, 0.0, 2.0),
        MpcWeights(1.0, 0.0, 0.1, 5),
        InputConstraints(-0.5, 0.5),
        staircase,
    )
    assert run.u.values.max() <= 0.5 + 1e-6
    assert run.u.values.min() >= -0.5 - 1e-6


def test_first_harmonic_is_exact() -> None:
    """Test the fitted amplitude on a window of non-integer periods."""
    omega = 2.0 * math.pi * 0.7
    t = np.arange(333) * 0.01
    x = 3.0 + 2.0 * np.cos(omega * t + 0.4)
    c = first_harmonic(x, omega, t)
    assert abs(c) == pytest.approx(2.0)
    assert math.atan2(c.imag, c.real) == pytest.approx(0.4)


def test_default_freq_grid() -> None:
    """Test the sweep frequencies."""
    grid = default_freq_grid()
    assert len(grid) == 15
    assert 0.2 in grid
    assert grid == sorted(grid)
    assert grid[0] == pytest.approx(0.02)
    assert grid[-1] == pytest.approx(5.0)


def test_identity_loop_is_flat() -> None:
    """Test 0 dB and 0 degrees for a loop that returns its input."""
    points = empirical_freq_response(lambda r: r, [0.5, 2.0], 1.0, 3.0, 2, 2, 0.01)
    for p in points:
        assert p.gain_db == pytest.approx(0.0, abs=1e-9)
        assert p.phase_deg == pytest.approx(0.0, abs=1e-7)


def test_linear_loop_matches_transfer_function() -> None:
    """Test a PL filter loop against its analytic response."""
    pl = pl_from_tc(0.05, 0.01)
    loop = lambda r: apply_filter(pl.as_filter(), r)  # noqa: E731
    freqs = [0.2, 1.0, 4.0]
    points = empirical_freq_response(loop, freqs, 2.0, 1.0, 10, 2, 0.01, workers=2)
    assert [p.freq_hz for p in points] == freqs
    for p in points:
        g = freq_response(pl.as_filter(), 2 * math.pi * p.freq_hz, 0.01)
        assert p.gain_db == pytest.approx(20 * math.log10(abs(g)), abs=1e-6)
        assert p.phase_deg == pytest.approx(
            math.degrees(math.atan2(g.imag, g.real)), abs=1e-4
        )
    for row in bode_rows(points, pl):
        assert row["gain_db_loop"] == pytest.approx(row["gain_db_pl"], abs=1e-6)


def test_sweep_argument_checks() -> None:
    """Test rejected sweeps."""
    with pytest.raises(ValueError):
        empirical_freq_response(lambda r: r, [60.0], 1.0, 0.0, 2, 1, 0.01)
    with pytest.raises(ValueError):
        empirical_freq_response(lambda r: r, [1.0], 1.0, 0.0, 1, 1, 0.01)
    with pytest.raises(NoConvergence):
        empirical_freq_response(
            lambda r: TimeSeries.zeros(len(r), r.ts), [1.0], 1.0, 0.0, 2, 1, 0.01
        )
    with pytest.raises(ValueError):
        FreqPoint(0.0, 0.0, 0.0)


def test_closed_loop_simulator(lag_plant) -> None:
    """Test the reference-to-output wrapper."""
    gains = PidGains(0.5, 0.2, 0.0, 1.0)
    r = staircase_reference([(1.0, 20.0)])
    run = closed_loop_simulator(lag_plant, gains)
    np.testing.assert_allclose(
        run(r).values, simulate_conventional(lag_plant, gains, r).y.values
    )
