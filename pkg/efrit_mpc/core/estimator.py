"""Prediction of the inner-loop plant input over the MPC horizon.

The pseudo-linearized inner loop is replaced by its PL model: given an
internal reference sequence v, the PL output y^ is iterated from the measured
output, the internal error e^ = v - y^ is fed through the tuned PID, and the
PID output is the estimate u^ of the real plant input. The map
v -> (u^, y^) is affine, which is what keeps the MPC problem a QP.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

from efrit_mpc.core.frit import ThetaFull
from efrit_mpc.core.pid import PidState, pid_step
from efrit_mpc.core.pl_model import pl_step


@dataclass(frozen=True)
class EstimatorState:
    """Inner PID state plus the last input it produced.

    Attributes:
        pid_state: Integral term and previous internal error
        last_u_hat: Input applied at the previous step (for du^ at i=0)
    """

    pid_state: PidState = field(default_factory=PidState)
    last_u_hat: float = 0.0


@dataclass(frozen=True)
class HorizonEstimate:
    """Estimated inputs, their variations and PL outputs over one horizon."""

    u_hat: list[float]
    du_hat: list[float]
    y_hat: list[float]
    x_end: float


def estimate_horizon(
    th: ThetaFull,
    s: EstimatorState,
    x0: float,
    v_seq: Sequence[float],
    ts: float,
) -> HorizonEstimate:
    """Estimate u^(k+i), du^(k+i) and y^(k+i) for i = 0..len(v_seq)-1.

    Args:
        th: Tuned [Kp, Ki, Kd, Tc]
        s: Estimator state at time k
        x0: Measured plant output y(k); the PL state is anchored to it
        v_seq: Internal references v(k), ..., v(k+H-1)
        ts: Sampling time

    Returns:
        Horizon estimate; `x_end` is the PL state after the last input, i.e.
        y^(k+H)
    """
    if not v_seq:
        raise ValueError("Internal reference sequence must not be empty")
    gains = th.gains(ts)
    model = th.pl(ts)
    pid_state = s.pid_state
    previous_u = s.last_u_hat
    x = x0
    u_hat: list[float] = []
    du_hat: list[float] = []
    y_hat: list[float] = []
    for v in v_seq:
        x, y = pl_step(model, x, v)
        u, pid_state = pid_step(gains, pid_state, v - y)
        u_hat.append(u)
        du_hat.append(u - previous_u)
        y_hat.append(y)
        previous_u = u
    return HorizonEstimate(u_hat=u_hat, du_hat=du_hat, y_hat=y_hat, x_end=x)


def advance_state(
    th: ThetaFull, s: EstimatorState, v_applied: float, y_measured: float, ts: float
) -> EstimatorState:
    """Update the estimator with the applied reference and the measured output.

    The real error e_v(k) = v(k) - y(k) drives the same PID recursion used for
    prediction, so u^(k|k) is exactly the input sent to the plant.

    Returns:
        State for time k+1; `last_u_hat` holds u(k)
    """
    u, pid_state = pid_step(th.gains(ts), s.pid_state, v_applied - y_measured)
    return EstimatorState(pid_state=pid_state, last_u_hat=u)
