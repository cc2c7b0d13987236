"""Ground-truth plant simulators and reference generators.

Plants are used only to produce I/O data and to evaluate controllers; the
tuning and control code never sees their equations. Every plant exposes the
same three calls so closed-loop simulators can treat them alike:

    state = plant.initial_state()
    y = plant.output(state)          # y(k), independent of u(k)
    state, y = plant.step(state, u)  # consume u(k), return y(k)
"""

import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Any, Generic, Protocol, TypeVar

import numpy as np
import yaml

from efrit_mpc.core.errors import ConfigError, Divergence
from efrit_mpc.core.signals import RationalFilter, TimeSeries

logger = logging.getLogger(__name__)

StateT = TypeVar("StateT")

DIVERGENCE_LIMIT = 1e6


class Plant(Protocol, Generic[StateT]):
    """Discrete-time SISO plant with caller-owned state."""

    name: str

    def initial_state(self) -> StateT:
        """State at rest."""
        ...

    def output(self, state: StateT) -> float:
        """Output y(k) determined by the stored history."""
        ...

    def step(self, state: StateT, u: float) -> tuple[StateT, float]:
        """Apply u(k); return the next state and y(k)."""
        ...


# Hammerstein


@dataclass(frozen=True)
class HammersteinState:
    """Previous outputs y(k-1), y(k-2) and intermediates x(k-1), x(k-2)."""

    y1: float = 0.0
    y2: float = 0.0
    x1: float = 0.0
    x2: float = 0.0


def hammerstein_nonlinearity(u: float) -> float:
    """Static input map x = 1.5u - 1.5u^2 + 0.5u^3."""
    return 1.5 * u - 1.5 * u**2 + 0.5 * u**3


def hammerstein_output(s: HammersteinState) -> float:
    """y(k) = 0.6y(k-1) - 0.1y(k-2) + 1.2x(k-1) - 0.1x(k-2)."""
    return 0.6 * s.y1 - 0.1 * s.y2 + 1.2 * s.x1 - 0.1 * s.x2


def hammerstein_step(s: HammersteinState, u: float) -> tuple[HammersteinState, float]:
    """Advance the second-order Hammerstein model by one sample.

    Args:
        s: Current regressors
        u: Input u(k)

    Returns:
        Tuple of (next state, y(k))
    """
    x = hammerstein_nonlinearity(u)
    y = hammerstein_output(s)
    return HammersteinState(y1=y, y2=s.y1, x1=x, x2=s.x1), y


class HammersteinPlant:
    """Hammerstein benchmark plant (unit sampling steps)."""

    name = "hammerstein"

    def initial_state(self) -> HammersteinState:
        """All regressors zero."""
        return HammersteinState()

    def output(self, state: HammersteinState) -> float:
        """Output from stored regressors."""
        return hammerstein_output(state)

    def step(self, state: HammersteinState, u: float) -> tuple[HammersteinState, float]:
        """One sample of the model."""
        return hammerstein_step(state, u)


# Asymmetric Bouc-Wen

BOUCWEN_DEFAULTS = "boucwen_params.yaml"


@dataclass(frozen=True)
class BoucWenParams:
    """Linear part (a1, a2, b1) and per-branch hysteresis parameters."""

    a1: float
    a2: float
    b1: float
    A1: float
    beta1: float
    gamma1: float
    c1: float
    d1: float
    e1: float
    A2: float
    beta2: float
    gamma2: float
    c2: float
    d2: float
    e2: float

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "BoucWenParams":
        """Build from a mapping keyed exactly by parameter name."""
        names = [f.name for f in fields(cls)]
        missing = [n for n in names if n not in data]
        unknown = [k for k in data if k not in names]
        if missing or unknown:
            raise ConfigError(
                f"Bouc-Wen parameters: missing {missing or 'none'}, "
                f"unknown {unknown or 'none'}"
            )
        try:
            return cls(**{n: float(data[n]) for n in names})
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Bouc-Wen parameters must be numeric: {e}") from e

    def without_hysteresis(self) -> "BoucWenParams":
        """Same linear part with every hysteresis parameter zeroed."""
        values = {k: 0.0 for k in asdict(self)}
        values.update(a1=self.a1, a2=self.a2, b1=self.b1)
        return BoucWenParams(**values)

    @property
    def linear_dc_gain(self) -> float:
        """b1 / (1 - a1 - a2)."""
        return self.b1 / (1.0 - self.a1 - self.a2)


def load_boucwen_params(path: str | Path | None = None) -> BoucWenParams:
    """Load Bouc-Wen parameters from YAML; the bundled identified set by default."""
    if path is None:
        text = resources.files("efrit_mpc.data").joinpath(BOUCWEN_DEFAULTS).read_text(
            encoding="utf-8"
        )
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read Bouc-Wen parameter file {path}: {e}") from e
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError("Bouc-Wen parameter file must hold a mapping")
    return BoucWenParams.from_mapping(data)


@dataclass(frozen=True)
class BoucWenState:
    """Output history, hysteresis-variable history and the previous input.

    Attributes:
        y_hist: y(k-1), y(k-2), y(k-3)
        h_hist: h(k-1), h(k-2)
        u_prev: u(k-1)
    """

    y_hist: tuple[float, float, float] = (0.0, 0.0, 0.0)
    h_hist: tuple[float, float] = (0.0, 0.0)
    u_prev: float = 0.0


def _branch(
    a: float,
    beta: float,
    gamma: float,
    c: float,
    d: float,
    e: float,
    dy: float,
    y: float,
    h_lag: float,
    h_last: float,
) -> float:
    return (
        a * dy
        + beta * abs(dy) * h_lag
        + gamma * dy * abs(h_last)
        + c * h_lag
        + d * y**2
        + e * y**3
    )


def boucwen_output(p: BoucWenParams, s: BoucWenState) -> tuple[float, float]:
    """Compute y(k) and the hysteresis variable h(k) from the history.

    Branch i is evaluated at lag i. Its beta and c terms read h(k-i) and its
    gamma term reads h(k-1), where h is the summed hysteresis variable. The
    quadratic and cubic offsets of the two branches nearly cancel in that
    sum, which keeps h small at rest.

    Returns:
        Tuple of (y(k), h(k))
    """
    y1, y2, y3 = s.y_hist
    h1, h2 = s.h_hist
    linear = p.a1 * y1 + p.a2 * y2 + p.b1 * s.u_prev
    h = _branch(p.A1, p.beta1, p.gamma1, p.c1, p.d1, p.e1, y1 - y2, y1, h1, h1)
    h += _branch(p.A2, p.beta2, p.gamma2, p.c2, p.d2, p.e2, y2 - y3, y2, h2, h1)
    return linear + h, h


def boucwen_step(
    p: BoucWenParams, s: BoucWenState, u: float
) -> tuple[BoucWenState, float]:
    """Advance the asymmetric Bouc-Wen model by one sample.

    Args:
        p: Model parameters
        s: Current state
        u: Input u(k); it reaches the output at k+1

    Returns:
        Tuple of (next state, y(k))

    Raises:
        Divergence: If |y(k)| exceeds 1e6
    """
    y, h = boucwen_output(p, s)
    if not abs(y) <= DIVERGENCE_LIMIT:
        raise Divergence(f"Bouc-Wen output {y:.3g} left the admissible range")
    state = BoucWenState(
        y_hist=(y, s.y_hist[0], s.y_hist[1]), h_hist=(h, s.h_hist[0]), u_prev=u
    )
    return state, y


class BoucWenPlant:
    """Asymmetric Bouc-Wen hysteresis plant."""

    name = "boucwen"

    def __init__(self, params: BoucWenParams | None = None) -> None:
        """Initialize the plant.

        Args:
            params: Model parameters; the bundled identified set if None
        """
        self.params = params or load_boucwen_params()

    def initial_state(self) -> BoucWenState:
        """All-zero history."""
        return BoucWenState()

    def output(self, state: BoucWenState) -> float:
        """Output from the stored history."""
        return boucwen_output(self.params, state)[0]

    def step(self, state: BoucWenState, u: float) -> tuple[BoucWenState, float]:
        """One sample of the model."""
        return boucwen_step(self.params, state, u)


# Linear test plant


@dataclass(frozen=True)
class LinearState:
    """Past inputs u(k-1).. and past outputs y(k-1).., newest first."""

    u_hist: tuple[float, ...]
    y_hist: tuple[float, ...]


class LinearPlant:
    """Strictly proper LTI plant G(z) realized as a difference equation."""

    name = "linear"

    def __init__(self, g: RationalFilter) -> None:
        """Initialize the plant.

        Args:
            g: Transfer function with num[0] == 0 (no direct feedthrough)
        """
        if g.num[0] != 0.0:
            raise ValueError("Linear plant must be strictly proper (num[0] == 0)")
        self.g = g

    def initial_state(self) -> LinearState:
        """Zero initial conditions."""
        return LinearState(
            u_hist=(0.0,) * (len(self.g.num) - 1), y_hist=(0.0,) * (len(self.g.den) - 1)
        )

    def output(self, state: LinearState) -> float:
        """y(k) from past inputs and outputs."""
        num, den = self.g.num, self.g.den
        acc = sum(b * u for b, u in zip(num[1:], state.u_hist))
        acc -= sum(a * y for a, y in zip(den[1:], state.y_hist))
        return acc / den[0]

    def step(self, state: LinearState, u: float) -> tuple[LinearState, float]:
        """One sample of the difference equation."""
        y = self.output(state)
        u_hist = ((u,) + state.u_hist)[: len(state.u_hist)]
        y_hist = ((y,) + state.y_hist)[: len(state.y_hist)]
        return LinearState(u_hist=u_hist, y_hist=y_hist), y


# References


def staircase_reference(
    spec: Sequence[tuple[float, float]], ts: float = 1.0
) -> TimeSeries:
    """Piecewise-constant reference.

    Args:
        spec: (value, duration in seconds) segments in order
        ts: Sampling time

    Returns:
        Series whose sample k (t = k*ts) holds the active segment's value
    """
    if not ts > 0:
        raise ValueError(f"Sampling time must be positive, got {ts}")
    chunks = []
    for value, duration in spec:
        if not duration > 0:
            raise ValueError(f"Segment durations must be positive, got {duration}")
        chunks.append(np.full(int(round(duration / ts)), float(value)))
    return TimeSeries(np.concatenate(chunks) if chunks else np.zeros(0), ts)


def sinusoid_reference(
    amp: float, offset: float, freq: float, duration: float, ts: float
) -> TimeSeries:
    """offset + amp * sin(2 pi freq t) sampled at t = k*ts for t < duration."""
    if not (duration > 0 and ts > 0):
        raise ValueError("Duration and sampling time must be positive")
    t = np.arange(int(round(duration / ts)), dtype=np.float64) * ts
    return TimeSeries(offset + amp * np.sin(2.0 * np.pi * freq * t), ts)
