"""First-order pseudo-linearization (PL) model.

P_L(Tc, z) = (1 - a) z^-1 / (1 - a z^-1) with a = exp(-Ts/Tc), and the matching
scalar state-space form x(k+1) = a x(k) + b v(k), y(k) = c x(k).
"""

import math
from dataclasses import dataclass

from efrit_mpc.core.errors import NonPositiveTimeConstant
from efrit_mpc.core.signals import RationalFilter


@dataclass(frozen=True)
class PlModel:
    """Discretized first-order lag with unity DC gain.

    Attributes:
        tc: Time constant in seconds
        ts: Sampling time in seconds
        a_p: exp(-ts/tc)
        b_p: 1 - a_p
        c_p: Output gain, always 1
    """

    tc: float
    ts: float
    a_p: float
    b_p: float
    c_p: float = 1.0

    def as_filter(self) -> RationalFilter:
        """Transfer-function view b z^-1 / (1 - a z^-1)."""
        return RationalFilter((0.0, self.b_p), (1.0, -self.a_p))


def pl_from_tc(tc: float, ts: float) -> PlModel:
    """Build the PL model for a time constant.

    Very large tc is accepted; b_p then loses relative precision.

    Args:
        tc: Time constant in seconds
        ts: Sampling time in seconds

    Returns:
        PL model

    Raises:
        NonPositiveTimeConstant: If tc <= 0
    """
    if not tc > 0:
        raise NonPositiveTimeConstant(f"Time constant must be positive, got {tc}")
    if not ts > 0:
        raise ValueError(f"Sampling time must be positive, got {ts}")
    a_p = math.exp(-ts / tc)
    b_p = 1.0 - a_p
    return PlModel(tc=tc, ts=ts, a_p=a_p, b_p=b_p, c_p=1.0)


def pl_step(m: PlModel, x: float, v: float) -> tuple[float, float]:
    """Advance the PL state by one sample.

    Args:
        m: PL model
        x: Current state x(k)
        v: Internal reference v(k)

    Returns:
        Tuple of (x(k+1), y(k)); y is read from the pre-update state
    """
    return m.a_p * x + m.b_p * v, m.c_p * x
