"""Receding-horizon control of the pseudo-linearized inner loop.

At every sample the cost

    J = q sum_{i=1..Hp} (y^(k+i) - r(k+i))^2
      + r sum_{i=0..Hu-1} du^(k+i)^2
      + v sum_{i=0..Hu-1} dv(k+i)^2

is condensed into a QP in the internal-reference moves dv (Hp = Hu), with
u_min <= u^(k+i) <= u_max on the estimated plant input. The QP is solved with
Hildreth's dual coordinate ascent and only the first move is applied.
"""

import enum
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from efrit_mpc.core.errors import InfeasibleConstraints, NonConvex
from efrit_mpc.core.estimator import EstimatorState, advance_state, estimate_horizon
from efrit_mpc.core.frit import ThetaFull
from efrit_mpc.core.signals import FloatArray, TimeSeries

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MpcWeights:
    """Scalar weights Q = q I, R = r I, V = v I and the horizon Hp = Hu."""

    q: float
    r: float
    v: float
    hp: int

    def __post_init__(self) -> None:
        """Validate the weights."""
        if self.q < 0 or self.r < 0:
            raise ValueError("Weights q and r must be non-negative")
        if not self.v > 0:
            raise ValueError("Weight v must be positive to keep the QP strictly convex")
        if self.hp < 1:
            raise ValueError("Horizon must be at least one step")


@dataclass(frozen=True)
class InputConstraints:
    """Box on the estimated plant input."""

    u_min: float
    u_max: float

    def __post_init__(self) -> None:
        """Validate the bounds."""
        if not self.u_min < self.u_max:
            raise ValueError(f"Need u_min < u_max, got [{self.u_min}, {self.u_max}]")

    def clip(self, u: float) -> float:
        """Saturate one input sample into the box."""
        return min(max(u, self.u_min), self.u_max)


@dataclass(frozen=True, eq=False)
class MpcProblem:
    """Condensed QP min 1/2 dv'H dv + f'dv + constant s.t. A dv <= b.

    The affine prediction maps are kept for diagnostics and for the
    projection fallback: u^ = u_offset + u_map dv, du^ = du_offset + du_map dv
    and y^(k+1..k+Hp) = y_offset + y_map dv.
    """

    hessian: FloatArray
    gradient: FloatArray
    a_ineq: FloatArray
    b_ineq: FloatArray
    constant: float = 0.0
    u_map: FloatArray | None = None
    u_offset: FloatArray | None = None
    du_map: FloatArray | None = None
    du_offset: FloatArray | None = None
    y_map: FloatArray | None = None
    y_offset: FloatArray | None = None
    u_min: float = -math.inf
    u_max: float = math.inf

    def objective(self, dv: FloatArray) -> float:
        """Value of the full cost, constant term included."""
        return float(0.5 * dv @ self.hessian @ dv + self.gradient @ dv + self.constant)


class QpStatus(enum.Enum):
    """Outcome of a QP solve."""

    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class QpSolution:
    """Solver output."""

    dv: FloatArray
    status: QpStatus
    iterations: int


def _predict(
    th: ThetaFull,
    est: EstimatorState,
    y_meas: float,
    v_prev: float,
    dv: FloatArray,
    ts: float,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    v_seq = v_prev + np.cumsum(dv)
    h = estimate_horizon(th, est, y_meas, v_seq.tolist(), ts)
    # Outputs one step ahead of the inputs: y^(k+1) .. y^(k+Hp)
    y_future = np.array(h.y_hat[1:] + [h.x_end])
    return np.array(h.u_hat), np.array(h.du_hat), y_future


def build_qp(
    th: ThetaFull,
    w: MpcWeights,
    c: InputConstraints,
    est: EstimatorState,
    y_meas: float,
    v_prev: float,
    r_preview: Sequence[float],
    ts: float,
) -> MpcProblem:
    """Condense the horizon cost and input box into a QP in dv.

    The estimator is evaluated at dv = 0 and at each unit move; because the
    estimator is affine in v these evaluations give the exact prediction maps.

    Args:
        th: Tuned [Kp, Ki, Kd, Tc]
        w: Weights and horizon
        c: Input constraints
        est: Estimator state at time k
        y_meas: Measured output y(k)
        v_prev: Internal reference applied at k-1
        r_preview: r(k+1), ..., r(k+Hp)
        ts: Sampling time

    Returns:
        Condensed problem

    Raises:
        NonConvex: If the Hessian is not positive definite
    """
    n = w.hp
    if len(r_preview) != n:
        raise ValueError(f"Reference preview needs {n} samples, got {len(r_preview)}")
    r = np.asarray(r_preview, dtype=np.float64)

    u0, du0, y0 = _predict(th, est, y_meas, v_prev, np.zeros(n), ts)
    u_map = np.zeros((n, n))
    du_map = np.zeros((n, n))
    y_map = np.zeros((n, n))
    for j in range(n):
        unit = np.zeros(n)
        unit[j] = 1.0
        u_j, du_j, y_j = _predict(th, est, y_meas, v_prev, unit, ts)
        u_map[:, j] = u_j - u0
        du_map[:, j] = du_j - du0
        y_map[:, j] = y_j - y0

    err0 = y0 - r
    hessian = 2.0 * (
        w.q * y_map.T @ y_map + w.r * du_map.T @ du_map + w.v * np.eye(n)
    )
    hessian = 0.5 * (hessian + hessian.T)
    gradient = 2.0 * (w.q * y_map.T @ err0 + w.r * du_map.T @ du0)
    constant = float(w.q * err0 @ err0 + w.r * du0 @ du0)

    if np.linalg.eigvalsh(hessian).min() <= 0:
        raise NonConvex("Condensed Hessian is not positive definite")

    return MpcProblem(
        hessian=hessian,
        gradient=gradient,
        a_ineq=np.vstack([u_map, -u_map]),
        b_ineq=np.concatenate([c.u_max - u0, u0 - c.u_min]),
        constant=constant,
        u_map=u_map,
        u_offset=u0,
        du_map=du_map,
        du_offset=du0,
        y_map=y_map,
        y_offset=y0,
        u_min=c.u_min,
        u_max=c.u_max,
    )


def saturate_inputs(p: MpcProblem, dv: FloatArray) -> FloatArray:
    """Push dv into the input box along the lower-triangular input map.

    Each u^(k+i) depends only on dv(0..i), so moves are corrected in order;
    a correction of dv(i) never disturbs the earlier inputs.
    """
    if p.u_map is None or p.u_offset is None:
        return dv
    out = np.array(dv, dtype=np.float64)
    for i in range(out.shape[0]):
        slope = p.u_map[i, i]
        if slope == 0.0:
            continue
        u = p.u_offset[i] + p.u_map[i] @ out
        if u > p.u_max:
            out[i] -= (u - p.u_max) / slope
        elif u < p.u_min:
            out[i] -= (u - p.u_min) / slope
    return out


def solve_qp(p: MpcProblem, tol: float = 1e-9, max_iter: int = 2000) -> QpSolution:
    """Solve the condensed QP with Hildreth's dual coordinate ascent.

    Args:
        p: Problem with a positive definite Hessian
        tol: Convergence tolerance on the KKT residual (infinity norm)
        max_iter: Maximum number of sweeps over the dual variables

    Returns:
        Solution; on MAX_ITER the last primal iterate, projected into the
        input box when it still violates the constraints

    Raises:
        InfeasibleConstraints: If the constraints admit no solution
    """
    factor = linalg.cho_factor(p.hessian)
    x_unc = -linalg.cho_solve(factor, p.gradient)
    a, b = p.a_ineq, p.b_ineq
    if a.shape[0] == 0 or np.all(a @ x_unc <= b + tol):
        return QpSolution(dv=x_unc, status=QpStatus.OPTIMAL, iterations=0)

    empty_rows = np.all(a == 0.0, axis=1)
    if np.any(b[empty_rows] < -tol):
        raise InfeasibleConstraints("An empty constraint row has a negative bound")

    hinv_at = linalg.cho_solve(factor, a.T)
    dual_h = a @ hinv_at
    dual_f = b - a @ x_unc
    diag = np.diag(dual_h).copy()
    lam = np.zeros(a.shape[0])
    x = x_unc

    for sweep in range(1, max_iter + 1):
        for i in range(lam.shape[0]):
            if diag[i] <= 0.0:
                continue
            step = -(dual_f[i] + dual_h[i] @ lam - diag[i] * lam[i]) / diag[i]
            lam[i] = max(0.0, step)
        if not np.all(np.isfinite(lam)) or np.max(lam) > 1e12:
            raise InfeasibleConstraints("Dual variables diverge")
        x = x_unc - hinv_at @ lam
        slack = b - a @ x
        residual = max(
            float(np.max(-slack, initial=0.0)),
            float(np.max(np.abs(lam * slack), initial=0.0)),
        )
        if residual <= tol:
            return QpSolution(dv=x, status=QpStatus.OPTIMAL, iterations=sweep)

    if np.max(a @ x - b) > tol:
        x = saturate_inputs(p, x)
    return QpSolution(dv=x, status=QpStatus.MAX_ITER, iterations=max_iter)


def reference_preview(r: TimeSeries, k: int, hp: int) -> list[float]:
    """r(k+1), ..., r(k+hp), holding the last known sample past the end."""
    last = len(r) - 1
    return [float(r.values[min(k + i, last)]) for i in range(1, hp + 1)]


@dataclass(frozen=True)
class MpcDiagnostics:
    """What the controller saw and decided at one step."""

    y_pred: list[float]
    u_pred: list[float]
    cost: float
    status: QpStatus
    iterations: int
    u_applied: float


@dataclass
class MpcController:
    """MPC over the PL model, owned and advanced by a single control loop.

    Attributes:
        theta: Tuned [Kp, Ki, Kd, Tc]
        weights: Cost weights and horizon
        constraints: Box on the plant input
        ts: Sampling time
        tol: QP tolerance
        max_iter: QP sweep limit
        estimator: Estimator state (shared with the inner PID)
        v_prev: Last applied internal reference; None until the first
            measurement, which then initializes it (bumpless start)
    """

    theta: ThetaFull
    weights: MpcWeights
    constraints: InputConstraints
    ts: float
    tol: float = 1e-9
    max_iter: int = 2000
    estimator: EstimatorState = field(default_factory=EstimatorState)
    v_prev: float | None = None
    steps: int = 0


def mpc_step(
    ctrl: MpcController, y_meas: float, r_preview: Sequence[float]
) -> tuple[float, MpcDiagnostics]:
    """Run one receding-horizon step and advance the controller.

    Args:
        ctrl: Controller, mutated in place
        y_meas: Measured output y(k)
        r_preview: r(k+1), ..., r(k+Hp)

    Returns:
        Tuple of (v(k), diagnostics); the plant input u(k) is
        `diagnostics.u_applied` (equal to `ctrl.estimator.last_u_hat`)
    """
    if ctrl.v_prev is None:
        ctrl.v_prev = y_meas
    p = build_qp(
        ctrl.theta,
        ctrl.weights,
        ctrl.constraints,
        ctrl.estimator,
        y_meas,
        ctrl.v_prev,
        r_preview,
        ctrl.ts,
    )
    try:
        sol = solve_qp(p, ctrl.tol, ctrl.max_iter)
    except InfeasibleConstraints as e:
        logger.warning(f"Step {ctrl.steps}: {e}; saturating the unconstrained solution")
        unconstrained = -linalg.solve(p.hessian, p.gradient, assume_a="pos")
        sol = QpSolution(saturate_inputs(p, unconstrained), QpStatus.INFEASIBLE, 0)
    if sol.status is QpStatus.MAX_ITER:
        logger.warning(f"Step {ctrl.steps}: QP stopped at {sol.iterations} sweeps")

    assert p.u_offset is not None and p.u_map is not None
    assert p.y_offset is not None and p.y_map is not None
    dv = sol.dv
    u_first = float(p.u_offset[0] + p.u_map[0] @ dv)
    bounds = ctrl.constraints
    if u_first > bounds.u_max + ctrl.tol or u_first < bounds.u_min - ctrl.tol:
        dv = saturate_inputs(p, dv)

    v = ctrl.v_prev + float(dv[0])
    ctrl.estimator = advance_state(ctrl.theta, ctrl.estimator, v, y_meas, ctrl.ts)
    ctrl.v_prev = v
    ctrl.steps += 1

    u_pred = p.u_offset + p.u_map @ dv
    y_pred = p.y_offset + p.y_map @ dv
    return v, MpcDiagnostics(
        y_pred=y_pred.tolist(),
        u_pred=u_pred.tolist(),
        cost=p.objective(dv),
        status=sol.status,
        iterations=sol.iterations,
        u_applied=ctrl.estimator.last_u_hat,
    )
