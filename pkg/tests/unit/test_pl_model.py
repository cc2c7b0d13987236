"""Tests for the pseudo-linearization model."""

import math

import numpy as np
import pytest

from efrit_mpc.core.errors import NonPositiveTimeConstant
from efrit_mpc.core.pl_model import pl_from_tc, pl_step
from efrit_mpc.core.signals import apply_filter, series_from


def test_coefficients() -> None:
    """Test the discretized coefficients."""
    half = pl_from_tc(0.01 / math.log(2.0), 0.01)
    assert half.a_p == pytest.approx(0.5)
    assert half.b_p == pytest.approx(0.5)

    m = pl_from_tc(0.81, 1.0)
    assert m.a_p == pytest.approx(0.2910, abs=1e-4)
    assert m.a_p + m.b_p == pytest.approx(1.0)
    assert m.c_p == 1.0
    assert m.as_filter().dc_gain == pytest.approx(1.0)


def test_very_slow_model_is_accepted() -> None:
    """Test the large time constant limit."""
    m = pl_from_tc(1e12, 0.01)
    assert m.a_p == pytest.approx(1.0)
    assert 0.0 <= m.b_p < 1e-12


def test_invalid_time_constant() -> None:
    """Test non-positive time constants."""
    with pytest.raises(NonPositiveTimeConstant):
        pl_from_tc(0.0, 1.0)
    with pytest.raises(NonPositiveTimeConstant):
        pl_from_tc(-1.0, 1.0)


def test_step() -> None:
    """Test single steps and the fixed point."""
    m = pl_from_tc(0.5, 0.1)
    assert pl_step(m, 0.0, 0.0) == (0.0, 0.0)
    x, y = pl_step(m, 1.0, 1.0)
    assert x == pytest.approx(1.0)
    assert y == 1.0


def test_step_iteration_matches_filter() -> None:
    """Test stepping against the geometric series and the filter view."""
    m = pl_from_tc(0.3, 0.1)
    x = 0.0
    states = []
    outputs = []
    for _ in range(30):
        x, y = pl_step(m, x, 1.0)
        states.append(x)
        outputs.append(y)
    k = np.arange(1, 31)
    np.testing.assert_allclose(states, 1.0 - m.a_p**k, atol=1e-12)
    assert all(b > a for a, b in zip(states, states[1:]))
    assert max(states) < 1.0

    filtered = apply_filter(m.as_filter(), series_from(np.ones(30), 0.1)).values
    np.testing.assert_allclose(outputs, filtered, atol=1e-12)
