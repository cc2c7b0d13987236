"""Tests for the horizon estimator."""

import math

import numpy as np
import pytest

from efrit_mpc.core.estimator import EstimatorState, advance_state, estimate_horizon
from efrit_mpc.core.frit import ThetaFull
from efrit_mpc.core.pid import PidState

TH = ThetaFull(0.6, 0.2, 0.05, 1.5)


def test_rest_gives_zeros() -> None:
    """Test the estimate of a loop at rest."""
    h = estimate_horizon(TH, EstimatorState(), 0.0, [0.0, 0.0, 0.0], 1.0)
    assert h.u_hat == [0.0, 0.0, 0.0]
    assert h.du_hat == [0.0, 0.0, 0.0]
    assert h.y_hat == [0.0, 0.0, 0.0]
    assert h.x_end == 0.0


def test_proportional_single_step() -> None:
    """Test one step with a P controller and a = 0.5."""
    th = ThetaFull(1.0, 0.0, 0.0, 1.0 / math.log(2.0))
    h = estimate_horizon(th, EstimatorState(), 0.0, [1.0], 1.0)
    assert h.u_hat == [pytest.approx(1.0)]
    assert h.du_hat == [pytest.approx(1.0)]
    assert h.y_hat == [0.0]
    assert h.x_end == pytest.approx(0.5)


def test_empty_horizon() -> None:
    """Test that an empty reference sequence is rejected."""
    with pytest.raises(ValueError):
        estimate_horizon(TH, EstimatorState(), 0.0, [], 1.0)


def test_estimate_is_affine_in_v() -> None:
    """Test the affine structure the QP relies on."""
    state = EstimatorState(PidState(integ=0.3, prev_err=-0.2), last_u_hat=0.4)
    rng = np.random.default_rng(7)
    va = rng.normal(size=6)
    vb = rng.normal(size=6)
    alpha = 0.3
    ha = estimate_horizon(TH, state, 0.8, va.tolist(), 0.5)
    hb = estimate_horizon(TH, state, 0.8, vb.tolist(), 0.5)
    hm = estimate_horizon(TH, state, 0.8, (alpha * va + (1 - alpha) * vb).tolist(), 0.5)
    for name in ("u_hat", "du_hat", "y_hat"):
        mixed = alpha * np.array(getattr(ha, name)) + (1 - alpha) * np.array(
            getattr(hb, name)
        )
        np.testing.assert_allclose(getattr(hm, name), mixed, atol=1e-12)


def test_shorter_horizon_is_a_prefix() -> None:
    """Test that predictions do not depend on later references."""
    state = EstimatorState(PidState(integ=0.1, prev_err=0.1), last_u_hat=0.2)
    v = [1.0, 1.5, 2.0, 2.0, 1.0]
    long = estimate_horizon(TH, state, 0.5, v, 1.0)
    short = estimate_horizon(TH, state, 0.5, v[:3], 1.0)
    assert short.u_hat == long.u_hat[:3]
    assert short.y_hat == long.y_hat[:3]
    assert short.du_hat == long.du_hat[:3]


def test_advance_matches_first_prediction() -> None:
    """Test that the applied input equals the first predicted input."""
    state = EstimatorState(PidState(integ=0.5, prev_err=0.3), last_u_hat=0.7)
    h = estimate_horizon(TH, state, 1.2, [2.0, 2.5], 1.0)
    nxt = advance_state(TH, state, 2.0, 1.2, 1.0)
    assert nxt.last_u_hat == pytest.approx(h.u_hat[0])
    assert nxt.pid_state.prev_err == pytest.approx(0.8)


def test_horizon_is_consistent_after_one_step() -> None:
    """Test that feeding back the model's own output reproduces the tail."""
    state = EstimatorState(PidState(integ=0.2, prev_err=-0.1), last_u_hat=0.3)
    v = np.random.default_rng(21).normal(size=6).tolist()
    h = estimate_horizon(TH, state, 0.4, v, 1.0)
    assert h.y_hat[0] == pytest.approx(0.4)

    nxt = advance_state(TH, state, v[0], h.y_hat[0], 1.0)
    again = estimate_horizon(TH, nxt, h.y_hat[1], v[1:] + [5.0], 1.0)
    for name in ("u_hat", "du_hat", "y_hat"):
        np.testing.assert_allclose(
            getattr(again, name)[:-1], getattr(h, name)[1:], rtol=0.0, atol=1e-12
        )
