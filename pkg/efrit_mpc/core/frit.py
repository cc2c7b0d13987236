"""Offline E-FRIT tuning of a PID controller jointly with a first-order PL model.

From one closed-loop record (u0, y0) logged under gains theta0, a candidate
theta = [Kp, Ki, Kd, Tc] is scored by

    r~  = C^-1(theta) u0 + y0
    y~  = P_L(Tc) r~
    u~  = C(theta) (r~ - y~)
    J_EF = ||y0 - y~||^2 + lambda ||du~||^2

with plain (unnormalized) sums and du~(0) = u~(0). The optimizer is scipy's
Nelder-Mead over [Kp, Ki, Kd, log Tc], restarted from seeded starting points.
"""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from efrit_mpc.core.errors import (
    NonFinite,
    NonInvertibleController,
    NonPositiveTimeConstant,
    NumericError,
)
from efrit_mpc.core.pid import PidGains, pid_as_filter, pid_inverse_filter
from efrit_mpc.core.pl_model import PlModel, pl_from_tc
from efrit_mpc.core.signals import FloatArray, TimeSeries, apply_filter

logger = logging.getLogger(__name__)

NEAR_ZERO_GAIN = 1e-6


@dataclass(frozen=True)
class IoRecord:
    """One closed-loop experiment logged under known PID gains.

    The loop that produced the record is assumed to be stable; this cannot be
    checked from the data.
    """

    u0: TimeSeries
    y0: TimeSeries
    theta0: PidGains

    def __post_init__(self) -> None:
        """Check that input and output line up."""
        self.u0._check_compatible(self.y0)

    @property
    def ts(self) -> float:
        """Sampling time of the record."""
        return self.u0.ts

    def __len__(self) -> int:
        """Number of samples."""
        return len(self.u0)


@dataclass(frozen=True)
class ThetaFull:
    """Tuning vector [Kp, Ki, Kd, Tc]."""

    kp: float
    ki: float
    kd: float
    tc: float

    def __post_init__(self) -> None:
        """Validate the time constant."""
        if not self.tc > 0:
            raise NonPositiveTimeConstant(f"Time constant must be positive: {self.tc}")

    def gains(self, ts: float) -> PidGains:
        """PID part of theta."""
        return PidGains(self.kp, self.ki, self.kd, ts)

    def pl(self, ts: float) -> PlModel:
        """PL model part of theta."""
        return pl_from_tc(self.tc, ts)

    def as_list(self) -> list[float]:
        """Return [kp, ki, kd, tc]."""
        return [self.kp, self.ki, self.kd, self.tc]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "ThetaFull":
        """Build from [kp, ki, kd, tc]."""
        if len(values) != 4:
            raise ValueError(f"Expected 4 values [kp, ki, kd, tc], got {len(values)}")
        kp, ki, kd, tc = (float(v) for v in values)
        return cls(kp, ki, kd, tc)


@dataclass(frozen=True)
class EfritConfig:
    """Weight and optimizer settings for E-FRIT.

    Attributes:
        lambda_: Weight on the fictitious input variation, >= 0
        starts: Number of Nelder-Mead starts (start 0 is theta0 itself)
        max_iter: Iteration limit per start
        xatol: Simplex size tolerance
        fatol: Cost spread tolerance across the simplex
        seed: Seed for the extra starting points
        workers: Threads used to run starts concurrently
    """

    lambda_: float
    starts: int = 8
    max_iter: int = 5000
    xatol: float = 1e-10
    fatol: float = 1e-10
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        """Validate the settings."""
        if not self.lambda_ >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lambda_}")
        if self.starts < 1:
            raise ValueError("At least one optimizer start is required")


@dataclass(frozen=True)
class StartResult:
    """Outcome of a single Nelder-Mead start."""

    index: int
    theta: ThetaFull
    cost: float
    iterations: int
    stalled: bool
    trace: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class TuningResult:
    """Best tuning found across all starts.

    Attributes:
        theta: Optimized [Kp, Ki, Kd, Tc]
        cost: J_EF at theta
        trace: Best-so-far cost per iteration of the winning start
        iterations: Iterations used by the winning start
        stalled: True when the winning start hit the iteration limit
        lambda_: Weight used
        starts: Per-start outcomes in start order
    """

    theta: ThetaFull
    cost: float
    trace: list[float]
    iterations: int
    stalled: bool
    lambda_: float
    starts: list[StartResult]


def fictitious_reference(rec: IoRecord, g: PidGains) -> TimeSeries:
    """Fictitious reference r~ = C^-1(g) u0 + y0.

    Args:
        rec: Logged record
        g: Candidate gains

    Returns:
        Fictitious reference

    Raises:
        NonInvertibleController: If the controller has no inverse
        NonFinite: If the inverse filter is unstable on this record
    """
    return apply_filter(pid_inverse_filter(g), rec.u0) + rec.y0


def fictitious_outputs(
    rec: IoRecord, th: ThetaFull
) -> tuple[TimeSeries, TimeSeries, TimeSeries]:
    """Desired output, fictitious input and its variation for a candidate theta.

    Args:
        rec: Logged record
        th: Candidate tuning vector

    Returns:
        Tuple of (y~, u~, du~) with du~(k) = u~(k) - u~(k-1) and u~(-1) = 0
    """
    g = th.gains(rec.ts)
    r_tilde = fictitious_reference(rec, g)
    y_tilde = apply_filter(th.pl(rec.ts).as_filter(), r_tilde)
    u_tilde = apply_filter(pid_as_filter(g), r_tilde - y_tilde)
    return y_tilde, u_tilde, u_tilde.difference()


def _cost_terms(
    u0: FloatArray, y0: FloatArray, th: ThetaFull, ts: float
) -> tuple[float, float]:
    # Array-level version of fictitious_outputs used inside the optimizer loop.
    g = th.gains(ts)
    c = pid_as_filter(g)
    if c.num[0] == 0.0:
        raise NonInvertibleController("Zero leading controller coefficient")
    pl = th.pl(ts)
    with np.errstate(over="ignore", invalid="ignore"):
        r_tilde = signal.lfilter(c.den, c.num, u0) + y0
        y_tilde = signal.lfilter((0.0, pl.b_p), (1.0, -pl.a_p), r_tilde)
        u_tilde = signal.lfilter(c.num, c.den, r_tilde - y_tilde)
        j_f = float(np.sum((y0 - y_tilde) ** 2))
        penalty = float(np.sum(np.diff(u_tilde, prepend=0.0) ** 2))
    if not (math.isfinite(j_f) and math.isfinite(penalty)):
        raise NonFinite("Fictitious signals are not finite")
    return j_f, penalty


def cost_decomposition(
    rec: IoRecord, th: ThetaFull, lambda_: float
) -> tuple[float, float]:
    """Split J_EF into its matching term and its weighted variation penalty.

    Returns:
        Tuple of (J_F, lambda * ||du~||^2)
    """
    j_f, penalty = _cost_terms(rec.u0.values, rec.y0.values, th, rec.ts)
    return j_f, lambda_ * penalty


def efrit_cost(rec: IoRecord, th: ThetaFull, lambda_: float) -> float:
    """E-FRIT cost J_EF = ||y0 - y~||^2 + lambda ||du~||^2.

    Points whose fictitious signals cannot be formed (non-invertible or
    unstable inverse controller) cost +inf.

    Args:
        rec: Logged record
        th: Candidate tuning vector
        lambda_: Variation weight

    Returns:
        Cost value, possibly +inf
    """
    try:
        j_f, penalty = _cost_terms(rec.u0.values, rec.y0.values, th, rec.ts)
    except NumericError:
        return math.inf
    return j_f + lambda_ * penalty


def _to_vector(th: ThetaFull) -> FloatArray:
    return np.array([th.kp, th.ki, th.kd, math.log(th.tc)])


def _from_vector(z: FloatArray) -> ThetaFull:
    return ThetaFull(float(z[0]), float(z[1]), float(z[2]), math.exp(float(z[3])))


def _initial_simplex(z0: FloatArray) -> FloatArray:
    # Gains move by half their size (at least 0.05); log tc moves by 0.5.
    simplex = np.tile(z0, (5, 1))
    for i in range(3):
        simplex[i + 1, i] += max(0.5 * abs(z0[i]), 0.05)
    simplex[4, 3] += 0.5
    return simplex


def _starting_points(th0: ThetaFull, cfg: EfritConfig) -> list[ThetaFull]:
    rng = np.random.default_rng(cfg.seed)
    points = [th0]
    for _ in range(cfg.starts - 1):
        gain_scale = 10.0 ** rng.uniform(-1.0, 2.0, size=3)
        tc_scale = 10.0 ** rng.uniform(-1.0, 1.0)
        points.append(
            ThetaFull(
                th0.kp * float(gain_scale[0]),
                th0.ki * float(gain_scale[1]),
                th0.kd * float(gain_scale[2]),
                th0.tc * float(tc_scale),
            )
        )
    return points


def _run_start(
    index: int, rec: IoRecord, start: ThetaFull, cfg: EfritConfig
) -> StartResult:
    u0, y0, ts = rec.u0.values, rec.y0.values, rec.ts

    def objective(z: FloatArray) -> float:
        if not np.all(np.isfinite(z)) or abs(z[3]) > 700:
            return math.inf
        try:
            j_f, penalty = _cost_terms(u0, y0, _from_vector(z), ts)
        except NumericError:
            return math.inf
        return j_f + cfg.lambda_ * penalty

    trace: list[float] = []

    def record(intermediate_result: optimize.OptimizeResult) -> None:
        best = float(intermediate_result.fun)
        trace.append(min(best, trace[-1]) if trace else best)

    z0 = _to_vector(start)
    res = optimize.minimize(
        objective,
        z0,
        method="Nelder-Mead",
        callback=record,
        options={
            "initial_simplex": _initial_simplex(z0),
            "maxiter": cfg.max_iter,
            "maxfev": 4 * cfg.max_iter,
            "xatol": cfg.xatol,
            "fatol": cfg.fatol,
        },
    )
    stalled = not bool(res.success)
    result = StartResult(
        index=index,
        theta=_from_vector(res.x),
        cost=float(res.fun),
        iterations=int(res.nit),
        stalled=stalled,
        trace=trace,
    )
    logger.info(
        f"E-FRIT start {index}: cost {result.cost:.6g} after {result.iterations} "
        f"iterations{' (stalled)' if stalled else ''}"
    )
    return result


def optimize_pl(rec: IoRecord, th0: ThetaFull, cfg: EfritConfig) -> TuningResult:
    """Minimize J_EF over [Kp, Ki, Kd, Tc] with seeded multi-start Nelder-Mead.

    The search runs over log Tc so every iterate keeps Tc > 0. Start 0 is th0,
    so the returned cost never exceeds J_EF(th0). Ties between starts go to the
    lowest start index.

    Args:
        rec: Logged record
        th0: Initial tuning vector
        cfg: Weight and optimizer settings

    Returns:
        Best tuning result; `stalled` is set (and a warning logged) when the
        winning start ran out of iterations
    """
    logger.info(
        f"Tuning from theta0={th0.as_list()} with lambda={cfg.lambda_:g}, "
        f"{cfg.starts} starts on {len(rec)} samples"
    )
    points = _starting_points(th0, cfg)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [
                pool.submit(_run_start, i, rec, p, cfg) for i, p in enumerate(points)
            ]
            results = [f.result() for f in futures]
    else:
        results = [_run_start(i, rec, p, cfg) for i, p in enumerate(points)]

    best = min(results, key=lambda r: (r.cost, r.index))
    if best.stalled:
        logger.warning(
            f"Optimizer stalled: start {best.index} reached {cfg.max_iter} iterations "
            "without meeting the tolerance; returning its best iterate"
        )
    for name, value in zip(("kp", "ki", "kd"), best.theta.as_list()[:3]):
        if abs(value) < NEAR_ZERO_GAIN:
            logger.warning(f"Optimized {name}={value:.3g} is pinned near zero")
    logger.info(f"Tuned theta={best.theta.as_list()} with J_EF={best.cost:.6g}")
    return TuningResult(
        theta=best.theta,
        cost=best.cost,
        trace=best.trace,
        iterations=best.iterations,
        stalled=best.stalled,
        lambda_=cfg.lambda_,
        starts=results,
    )
