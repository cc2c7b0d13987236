"""Shared fixtures for efrit-mpc tests."""

import math

import numpy as np
import pytest

from efrit_mpc.core.analysis import generate_record
from efrit_mpc.core.frit import IoRecord
from efrit_mpc.core.pid import PidGains
from efrit_mpc.core.plants import LinearPlant, staircase_reference
from efrit_mpc.core.signals import RationalFilter, TimeSeries

# Integrator plant 0.5 z^-1 / (1 - z^-1); under P control with kp = 1 the loop
# is exactly the PL model with a = 0.5.
INTEGRATOR = RationalFilter((0.0, 0.5), (1.0, -1.0))
EXACT_TC = 1.0 / math.log(2.0)


@pytest.fixture
def staircase() -> TimeSeries:
    """Unit-sampled staircase reference with four levels."""
    return staircase_reference([(1.0, 30.0), (3.0, 30.0), (2.0, 30.0), (4.0, 30.0)])


@pytest.fixture
def integrator_record(staircase: TimeSeries) -> IoRecord:
    """Record whose closed loop matches the PL model exactly."""
    gains = PidGains(1.0, 0.0, 0.0, 1.0)
    return generate_record(LinearPlant(INTEGRATOR), gains, staircase)


@pytest.fixture
def lag_plant() -> LinearPlant:
    """Stable first-order plant 0.3 z^-1 / (1 - 0.7 z^-1)."""
    return LinearPlant(RationalFilter((0.0, 0.3), (1.0, -0.7)))


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def fast_scenario(tmp_path) -> dict:
    """Short Hammerstein scenario with a cheap optimizer budget."""
    return {
        "name": "fast",
        "plant": {"kind": "hammerstein"},
        "reference": {
            "kind": "staircase",
            "steps": [[0.5, 20], [1.0, 20], [1.5, 20]],
        },
        "ts": 1.0,
        "tuning": {
            "theta0": [1.0e-2, 1.0e-2, 1.0e-3],
            "lambda": 1.0e3,
            "starts": 2,
            "max_iter": 300,
        },
        "mpc": {"q": 1000.0, "r": 0.0, "v": 1.0, "hp": 5},
        "constraints": {"u_min": 0.0, "u_max": 2.0},
        "seed": 0,
        "output": {"dir": str(tmp_path / "fast")},
    }
