"""Closed-loop evaluation of the proposed and conventional controllers.

Every simulator here uses the same order within a sample k: read y(k) from the
plant state, add measurement noise if any, compute u(k), advance the plant.
"""

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from efrit_mpc.core.errors import NoConvergence
from efrit_mpc.core.frit import IoRecord, ThetaFull
from efrit_mpc.core.mpc import (
    InputConstraints,
    MpcController,
    MpcDiagnostics,
    MpcWeights,
    mpc_step,
    reference_preview,
)
from efrit_mpc.core.pid import PidGains, PidState, pid_step
from efrit_mpc.core.pl_model import PlModel, pl_from_tc
from efrit_mpc.core.plants import Plant
from efrit_mpc.core.signals import (
    FloatArray,
    TimeSeries,
    apply_filter,
    freq_response,
    series_from,
)

logger = logging.getLogger(__name__)

DEAD_LOOP_POWER = 1e-12

LoopSimulator = Callable[[TimeSeries], TimeSeries]


@dataclass(frozen=True)
class ConventionalRun:
    """Output of the unity-feedback PID loop.

    Attributes:
        y: Plant output (noise free)
        u: Plant input
        y_m: Desired output P_L(tc) r, when a time constant was given
    """

    y: TimeSeries
    u: TimeSeries
    y_m: TimeSeries | None = None


@dataclass(frozen=True)
class ProposedRun:
    """Output of the MPC-over-PL loop with per-step diagnostics."""

    y: TimeSeries
    u: TimeSeries
    v: TimeSeries
    diagnostics: list[MpcDiagnostics] = field(default_factory=list)


def _noise_at(noise: FloatArray | None, k: int) -> float:
    return 0.0 if noise is None else float(noise[k])


def _check_noise(noise: FloatArray | None, n: int) -> None:
    if noise is not None and len(noise) != n:
        raise ValueError(f"Noise has {len(noise)} samples, reference has {n}")


def simulate_conventional(
    plant: Plant[Any],
    gains: PidGains,
    r: TimeSeries,
    tc: float | None = None,
    noise: FloatArray | None = None,
    saturation: InputConstraints | None = None,
) -> ConventionalRun:
    """Simulate e = r - y, u = C(gains) e, y = plant(u).

    Args:
        plant: Plant to control
        gains: PID gains
        r: Reference
        tc: PL time constant for the desired output y_m (optional)
        noise: Additive measurement noise per sample (optional)
        saturation: Actuator range; the PID output is clipped into it before
            it reaches the plant and the integrator keeps running

    Returns:
        Output, applied input and desired output series

    Raises:
        Divergence: Propagated from the plant
    """
    _check_noise(noise, len(r))
    state = plant.initial_state()
    pid_state = PidState()
    y = np.empty(len(r))
    u = np.empty(len(r))
    for k in range(len(r)):
        y[k] = plant.output(state)
        err = float(r.values[k]) - (y[k] + _noise_at(noise, k))
        u[k], pid_state = pid_step(gains, pid_state, err)
        if saturation is not None:
            u[k] = saturation.clip(float(u[k]))
        state, _ = plant.step(state, float(u[k]))
    y_m = None
    if tc is not None:
        y_m = apply_filter(pl_from_tc(tc, r.ts).as_filter(), r)
    return ConventionalRun(y=series_from(y, r.ts), u=series_from(u, r.ts), y_m=y_m)


def generate_record(
    plant: Plant[Any],
    gains: PidGains,
    r: TimeSeries,
    noise: FloatArray | None = None,
    saturation: InputConstraints | None = None,
) -> IoRecord:
    """Log one closed-loop experiment under the initial gains.

    The recorded output is the measured one, noise included, and the recorded
    input is the one applied to the plant.
    """
    run = simulate_conventional(plant, gains, r, noise=noise, saturation=saturation)
    y0 = run.y if noise is None else series_from(run.y.values + noise, r.ts)
    logger.info(f"Generated a {len(r)}-sample record on the {plant.name} plant")
    return IoRecord(u0=run.u, y0=y0, theta0=gains)


def simulate_proposed(
    plant: Plant[Any],
    th: ThetaFull,
    weights: MpcWeights,
    constraints: InputConstraints,
    r: TimeSeries,
    tol: float = 1e-9,
    max_iter: int = 2000,
    noise: FloatArray | None = None,
) -> ProposedRun:
    """Simulate the MPC that sets the internal reference of the tuned PID.

    Args:
        plant: Plant to control
        th: Tuned [Kp, Ki, Kd, Tc]
        weights: MPC weights and horizon
        constraints: Box on the plant input
        r: Reference; previews past its end hold the last sample
        tol: QP tolerance
        max_iter: QP sweep limit
        noise: Additive measurement noise per sample (optional)

    Returns:
        Output, plant input, internal reference and diagnostics per step
    """
    _check_noise(noise, len(r))
    ctrl = MpcController(
        theta=th,
        weights=weights,
        constraints=constraints,
        ts=r.ts,
        tol=tol,
        max_iter=max_iter,
    )
    state = plant.initial_state()
    y = np.empty(len(r))
    u = np.empty(len(r))
    v = np.empty(len(r))
    diagnostics: list[MpcDiagnostics] = []
    for k in range(len(r)):
        y[k] = plant.output(state)
        preview = reference_preview(r, k, weights.hp)
        v[k], diag = mpc_step(ctrl, y[k] + _noise_at(noise, k), preview)
        u[k] = diag.u_applied
        diagnostics.append(diag)
        state, _ = plant.step(state, float(u[k]))
    return ProposedRun(
        y=series_from(y, r.ts),
        u=series_from(u, r.ts),
        v=series_from(v, r.ts),
        diagnostics=diagnostics,
    )


def closed_loop_simulator(
    plant: Plant[Any], gains: PidGains, saturation: InputConstraints | None = None
) -> LoopSimulator:
    """Reference-to-output map of the PID loop, for frequency sweeps."""

    def run(r: TimeSeries) -> TimeSeries:
        return simulate_conventional(plant, gains, r, saturation=saturation).y

    return run


# Frequency response


@dataclass(frozen=True)
class FreqPoint:
    """Gain and phase at one frequency."""

    freq_hz: float
    gain_db: float
    phase_deg: float

    def __post_init__(self) -> None:
        """Check the frequency."""
        if not self.freq_hz > 0:
            raise ValueError(f"Frequency must be positive, got {self.freq_hz}")


def first_harmonic(x: FloatArray, omega: float, t: FloatArray) -> complex:
    """Complex amplitude c with x(t) ~ Re(c e^{j omega t}) + const.

    Fits cos, sin and a constant by least squares, which is exact for a pure
    sinusoid on any window and equals single-frequency correlation on integer
    periods.
    """
    basis = np.column_stack([np.cos(omega * t), np.sin(omega * t), np.ones_like(t)])
    (a, b, _), *_ = np.linalg.lstsq(basis, x, rcond=None)
    return complex(a, -b)


def default_freq_grid() -> list[float]:
    """Fourteen log-spaced frequencies in [0.02, 5] Hz plus 0.2 Hz."""
    grid = np.logspace(math.log10(0.02), math.log10(5.0), 14).tolist()
    return sorted(set(grid) | {0.2})


def _measure_point(
    loop: LoopSimulator,
    freq: float,
    amp: float,
    offset: float,
    settle_periods: int,
    measure_periods: int,
    ts: float,
) -> FreqPoint:
    omega = 2.0 * math.pi * freq
    n_settle = math.ceil(settle_periods / (freq * ts))
    n_measure = max(math.ceil(measure_periods / (freq * ts)), 3)
    t = np.arange(n_settle + n_measure, dtype=np.float64) * ts
    drive = offset + amp * np.sin(omega * t)
    y = loop(series_from(drive, ts)).values
    t_w = t[n_settle:]
    y_c = first_harmonic(y[n_settle:], omega, t_w)
    if abs(y_c) ** 2 < DEAD_LOOP_POWER:
        raise NoConvergence(f"No output at the drive frequency {freq:g} Hz")
    u_c = first_harmonic(drive[n_settle:], omega, t_w)
    g = y_c / u_c
    point = FreqPoint(
        freq_hz=freq,
        gain_db=20.0 * math.log10(abs(g)),
        phase_deg=math.degrees(math.atan2(g.imag, g.real)),
    )
    logger.debug(f"{freq:.4g} Hz: {point.gain_db:.3f} dB, {point.phase_deg:.2f} deg")
    return point


def empirical_freq_response(
    loop: LoopSimulator,
    freqs: Sequence[float],
    amp: float,
    offset: float,
    settle_periods: int,
    measure_periods: int,
    ts: float,
    workers: int = 1,
) -> list[FreqPoint]:
    """Describing response of a (possibly nonlinear) loop to offset + amp*sin.

    Each frequency gets its own run from rest. The first `settle_periods`
    periods are discarded and the first harmonic of the output is compared
    with that of the drive over the next `measure_periods` periods.

    Args:
        loop: Simulator mapping a reference series to an output series
        freqs: Frequencies in Hz, each below Nyquist
        amp: Drive amplitude
        offset: Drive offset
        settle_periods: Periods discarded before measuring, >= 2
        measure_periods: Periods measured, >= 1
        ts: Sampling time
        workers: Threads used to run frequencies concurrently

    Returns:
        One point per frequency, in input order

    Raises:
        NoConvergence: If the output has no power at a drive frequency
    """
    if settle_periods < 2 or measure_periods < 1:
        raise ValueError("Need settle_periods >= 2 and measure_periods >= 1")
    nyquist = 0.5 / ts
    for f in freqs:
        if not 0 < f < nyquist:
            raise ValueError(f"Frequency {f} Hz outside (0, {nyquist:g}) Hz")

    def measure(f: float) -> FreqPoint:
        return _measure_point(loop, f, amp, offset, settle_periods, measure_periods, ts)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(measure, freqs))
    return [measure(f) for f in freqs]


def bode_rows(points: Sequence[FreqPoint], pl: PlModel) -> list[dict[str, float]]:
    """Pair measured loop points with the PL model response at the same frequencies."""
    rows = []
    for p in points:
        g = freq_response(pl.as_filter(), 2.0 * math.pi * p.freq_hz, pl.ts)
        rows.append(
            {
                "freq_hz": p.freq_hz,
                "gain_db_loop": p.gain_db,
                "phase_deg_loop": p.phase_deg,
                "gain_db_pl": 20.0 * math.log10(abs(g)),
                "phase_deg_pl": math.degrees(math.atan2(g.imag, g.real)),
            }
        )
    return rows
