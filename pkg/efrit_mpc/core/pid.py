"""Discrete-time PID controller.

C(z) = Kp + Ki*Ts/(1 - z^-1) + Kd*(1 - z^-1)/Ts, realized three ways: as a
rational filter, as its inverse (for fictitious references) and as an online
stepper whose state the caller threads through.

The derivative acts on the error without filtering and there is no
anti-windup; input limits are handled by the predictive layer.
"""

import math
from dataclasses import dataclass

from efrit_mpc.core.errors import NonInvertibleController
from efrit_mpc.core.signals import RationalFilter


@dataclass(frozen=True)
class PidGains:
    """PID gains and the sampling time they are defined for."""

    kp: float
    ki: float
    kd: float
    ts: float

    def __post_init__(self) -> None:
        """Validate the gains."""
        if not self.ts > 0:
            raise ValueError(f"Sampling time must be positive, got {self.ts}")
        if not all(math.isfinite(g) for g in (self.kp, self.ki, self.kd)):
            raise ValueError("PID gains must be finite")

    @property
    def lead_coefficient(self) -> float:
        """Constant numerator term of C(z) over the denominator Ts(1 - z^-1)."""
        return self.kp * self.ts + self.ki * self.ts**2 + self.kd

    @property
    def feedthrough(self) -> float:
        """Instantaneous gain from e(k) to u(k): Kp + Ki*Ts + Kd/Ts."""
        return self.kp + self.ki * self.ts + self.kd / self.ts

    def as_list(self) -> list[float]:
        """Return [kp, ki, kd]."""
        return [self.kp, self.ki, self.kd]


@dataclass(frozen=True)
class PidState:
    """Accumulated integral term and the previous error sample."""

    integ: float = 0.0
    prev_err: float = 0.0


def pid_as_filter(g: PidGains) -> RationalFilter:
    """Express the controller over the common denominator Ts(1 - z^-1).

    Args:
        g: Controller gains

    Returns:
        num = [KpTs + KiTs^2 + Kd, -(KpTs + 2Kd), Kd], den = [Ts, -Ts]
    """
    return RationalFilter(
        (g.lead_coefficient, -(g.kp * g.ts + 2.0 * g.kd), g.kd),
        (g.ts, -g.ts),
    )


def pid_inverse_filter(g: PidGains) -> RationalFilter:
    """Inverse controller C^-1(z).

    Args:
        g: Controller gains

    Returns:
        Filter with numerator and denominator swapped

    Raises:
        NonInvertibleController: If KpTs + KiTs^2 + Kd is zero
    """
    if g.lead_coefficient == 0.0:
        raise NonInvertibleController(
            f"Controller with gains {g.as_list()} has a zero leading coefficient"
        )
    return pid_as_filter(g).inverse()


def pid_step(g: PidGains, s: PidState, err: float) -> tuple[float, PidState]:
    """Advance the PID by one sample.

    Args:
        g: Controller gains
        s: Current state
        err: Error sample e(k)

    Returns:
        Tuple of (u(k), next state)
    """
    integ = s.integ + g.ki * err * g.ts
    u = g.kp * err + integ + g.kd * (err - s.prev_err) / g.ts
    return u, PidState(integ=integ, prev_err=err)
