"""Uniformly sampled signals, rational discrete-time filters and shared metrics.

Every filter in the toolkit is a ratio of polynomials in the unit-delay
operator z^-1, stored constant term first, and is applied with zero initial
conditions.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from scipy import signal

from efrit_mpc.core.errors import (
    DenominatorZero,
    LengthMismatch,
    NonFinite,
    ZeroLeadingDenominator,
)

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A uniformly sampled scalar signal.

    Attributes:
        values: Samples, read-only
        ts: Sampling time in seconds
    """

    values: FloatArray
    ts: float

    def __post_init__(self) -> None:
        """Validate and freeze the samples."""
        if not self.ts > 0 or not math.isfinite(self.ts):
            raise ValueError(f"Sampling time must be positive, got {self.ts}")
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise NonFinite("TimeSeries samples must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "ts", float(self.ts))

    def __len__(self) -> int:
        """Return the number of samples."""
        return int(self.values.shape[0])

    @property
    def times(self) -> FloatArray:
        """Sample instants k * ts."""
        return np.arange(len(self), dtype=np.float64) * self.ts

    def _check_compatible(self, other: "TimeSeries") -> None:
        if len(self) != len(other) or self.ts != other.ts:
            raise LengthMismatch(
                f"Signals differ: {len(self)} samples at ts={self.ts} vs "
                f"{len(other)} samples at ts={other.ts}"
            )

    def __add__(self, other: "TimeSeries") -> "TimeSeries":
        """Sample-wise sum of two compatible series."""
        self._check_compatible(other)
        return TimeSeries(self.values + other.values, self.ts)

    def __sub__(self, other: "TimeSeries") -> "TimeSeries":
        """Sample-wise difference of two compatible series."""
        self._check_compatible(other)
        return TimeSeries(self.values - other.values, self.ts)

    def scale(self, factor: float) -> "TimeSeries":
        """Return the series multiplied by a scalar."""
        return TimeSeries(self.values * factor, self.ts)

    def difference(self) -> "TimeSeries":
        """First difference x(k) - x(k-1) with x(-1) = 0."""
        return TimeSeries(np.diff(self.values, prepend=0.0), self.ts)

    @classmethod
    def zeros(cls, n: int, ts: float) -> "TimeSeries":
        """All-zero series of length n."""
        return cls(np.zeros(n), ts)


def _as_coefficients(coeffs: Iterable[float], name: str) -> tuple[float, ...]:
    values = tuple(float(c) for c in coeffs)
    if not values:
        raise ValueError(f"{name} coefficient list must not be empty")
    if not all(math.isfinite(c) for c in values):
        raise NonFinite(f"{name} coefficients must be finite")
    return values


@dataclass(frozen=True)
class RationalFilter:
    """Ratio of two polynomials in z^-1.

    Attributes:
        num: Numerator coefficients, constant term first
        den: Denominator coefficients, constant term first, den[0] != 0
    """

    num: tuple[float, ...]
    den: tuple[float, ...] = field(default=(1.0,))

    def __post_init__(self) -> None:
        """Normalize coefficient storage and validate the denominator."""
        num = _as_coefficients(self.num, "Numerator")
        den = _as_coefficients(self.den, "Denominator")
        if den[0] == 0.0:
            raise ZeroLeadingDenominator("Leading denominator coefficient is zero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __mul__(self, other: "RationalFilter") -> "RationalFilter":
        """Series connection (polynomial product of numerators and denominators)."""
        return RationalFilter(
            tuple(np.convolve(self.num, other.num)),
            tuple(np.convolve(self.den, other.den)),
        )

    def inverse(self) -> "RationalFilter":
        """Swap numerator and denominator."""
        return RationalFilter(self.den, self.num)

    @property
    def dc_gain(self) -> float:
        """Gain at z = 1."""
        return sum(self.num) / sum(self.den)

    @classmethod
    def gain(cls, k: float) -> "RationalFilter":
        """Static gain filter."""
        return cls((k,), (1.0,))

    @classmethod
    def delay(cls, steps: int = 1) -> "RationalFilter":
        """Pure delay z^-steps."""
        return cls(tuple([0.0] * steps + [1.0]), (1.0,))


def apply_filter(f: RationalFilter, x: TimeSeries) -> TimeSeries:
    """Filter a series with zero initial conditions.

    y(k) = (sum_i num[i] x(k-i) - sum_{j>=1} den[j] y(k-j)) / den[0]

    Args:
        f: Filter to apply
        x: Input series

    Returns:
        Output series of the same length and sampling time

    Raises:
        ZeroLeadingDenominator: If den[0] is zero
        NonFinite: If the output overflows (the filter is unstable on this data)
    """
    if f.den[0] == 0.0:
        raise ZeroLeadingDenominator("Leading denominator coefficient is zero")
    if len(x) == 0:
        raise ValueError("Cannot filter an empty series")
    with np.errstate(over="ignore", invalid="ignore"):
        y = signal.lfilter(f.num, f.den, x.values)
    if not np.all(np.isfinite(y)):
        raise NonFinite("Filter output is not finite; filter is unstable on this data")
    return TimeSeries(y, x.ts)


def freq_response(f: RationalFilter, omega: float, ts: float) -> complex:
    """Evaluate num(e^{-j omega ts}) / den(e^{-j omega ts}).

    Args:
        f: Filter
        omega: Angular frequency in rad/s, 0 <= omega <= pi / ts
        ts: Sampling time in seconds

    Returns:
        Complex frequency response

    Raises:
        DenominatorZero: If a pole lies on the unit circle at this frequency
    """
    if omega < 0 or omega > math.pi / ts * (1 + 1e-12):
        raise ValueError(f"Frequency {omega} rad/s outside [0, pi/ts]")
    w = np.exp(-1j * omega * ts)
    den = np.polynomial.polynomial.polyval(w, f.den)
    if abs(den) < 1e-12:
        raise DenominatorZero(f"Pole on the unit circle at omega={omega}")
    return complex(np.polynomial.polynomial.polyval(w, f.num) / den)


def rmse(a: TimeSeries, b: TimeSeries) -> float:
    """Root mean square of a - b."""
    err = a - b
    return float(np.sqrt(np.mean(err.values**2)))


def sd(e: TimeSeries) -> float:
    """Population standard deviation (divisor N) of an error series."""
    if len(e) == 0:
        raise LengthMismatch("Standard deviation of an empty series")
    return float(np.std(e.values))


def window(x: TimeSeries, t_start: float, t_end: float) -> TimeSeries:
    """Sub-series with t_start <= k*ts < t_end."""
    t = x.times
    mask = (t >= t_start - 1e-9 * x.ts) & (t < t_end - 1e-9 * x.ts)
    return TimeSeries(x.values[mask], x.ts)


def settling_samples(y: TimeSeries, r: TimeSeries, band: float = 0.02) -> list[int]:
    """Samples needed to settle after each step of a piecewise-constant reference.

    A segment starts wherever r changes value. The output counts as settled
    once it stays within +/- band * |step size| of the new level until the end
    of the segment.

    Args:
        y: Output series
        r: Piecewise-constant reference
        band: Relative settling band

    Returns:
        One count per step (segment length when the output never settles)
    """
    r._check_compatible(y)
    breaks = [0] + [k for k in range(1, len(r)) if r.values[k] != r.values[k - 1]]
    ends = breaks[1:] + [len(r)]
    counts: list[int] = []
    previous = 0.0
    for start, end in zip(breaks, ends):
        level = float(r.values[start])
        tol = band * max(abs(level - previous), 1e-12)
        outside = np.abs(y.values[start:end] - level) > tol
        idx = np.flatnonzero(outside)
        counts.append(0 if idx.size == 0 else int(idx[-1]) + 1)
        previous = level
    return counts


def series_from(values: Sequence[float] | FloatArray, ts: float) -> TimeSeries:
    """Build a TimeSeries from any sequence of floats."""
    return TimeSeries(np.asarray(values, dtype=np.float64), ts)
