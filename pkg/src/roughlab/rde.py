"""Solvers: the step-N Euler scheme with drift, classical ODE and Jacobian
flows along piecewise-linear drivers, and the auxiliary-ODE representation of
drifted equations through the driftless flow.

The classical integrator is a fixed-step 4th-order Runge-Kutta with a set
number of substeps per driver segment: deterministic, so convergence slopes
are reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import VectorFieldSystem, word_operator_value
from .paths import GridRoughPath, PiecewisePath, path_restrict, path_reverse
from .tensor import GroupElement

BLOWUP_LIMIT = 1e12


# -- step-N Euler scheme --------------------------------------------------------


def _euler_increment(VF: VectorFieldSystem, y: np.ndarray, g: GroupElement, h: float):
    if g.shape.d != VF.d:
        raise ValueError(f"driver dimension {g.shape.d} does not match system d={VF.d}")
    N = g.shape.N
    incr = np.zeros(VF.e)
    top = np.zeros(VF.e)
    for k in range(1, N + 1):
        level = g.tensor.levels[k]
        part = np.zeros(VF.e)
        for idx in np.argwhere(level != 0.0):
            word = tuple(int(i) + 1 for i in idx)
            part += float(level[tuple(idx)]) * word_operator_value(VF.fields, word, y)
        incr += part
        if k == N:
            top = part
    if VF.drift is not None:
        incr += VF.drift.value(y) * h
    return incr, float(np.linalg.norm(top))


def euler_step(VF: VectorFieldSystem, y: np.ndarray, g: GroupElement, h: float) -> np.ndarray:
    """One update of the step-N scheme: contract iterated-operator words
    against the driver increment's signature coordinates, then add the
    first-order drift term V_0(y) h."""
    incr, _ = _euler_increment(VF, np.asarray(y, dtype=float), g, h)
    return np.asarray(y, dtype=float) + incr


@dataclass
class SolveReport:
    """Trajectory of a grid solve plus per-step diagnostics.

    ``remainders`` holds the norm of each step's top-level contribution, the
    term a depth-(N-1) scheme would drop; it is a cheap local-error proxy.
    """

    times: np.ndarray
    states: np.ndarray
    remainders: np.ndarray
    success: bool = True
    blowup_index: int | None = None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def rde_solve_euler(VF: VectorFieldSystem, X: GridRoughPath, y0) -> SolveReport:
    """Left-to-right application of euler_step over the grid increments."""
    y = np.asarray(y0, dtype=float).copy()
    times = X.grid.times
    states = [y.copy()]
    remainders = []
    inv_prev = X.elements[0].inverse()
    for i in range(len(times) - 1):
        g = inv_prev @ X.elements[i + 1]
        incr, top = _euler_increment(VF, y, g, times[i + 1] - times[i])
        y = y + incr
        if not np.all(np.isfinite(y)) or float(np.linalg.norm(y)) > BLOWUP_LIMIT:
            return SolveReport(
                times=times[: i + 1],
                states=np.vstack(states),
                remainders=np.array(remainders),
                success=False,
                blowup_index=i,
            )
        states.append(y.copy())
        remainders.append(top)
        inv_prev = X.elements[i + 1].inverse()
    return SolveReport(times=times, states=np.vstack(states), remainders=np.array(remainders))


# -- classical flows along piecewise-linear drivers ------------------------------


def _segment_rhs(VF: VectorFieldSystem, slope: np.ndarray):
    def rhs(y):
        out = VF.drift.value(y).copy() if VF.drift is not None else np.zeros(VF.e)
        for si, field in zip(slope, VF.fields):
            if si != 0.0:
                out += si * field.value(y)
        return out

    return rhs


def _segment_rhs_jac(VF: VectorFieldSystem, slope: np.ndarray):
    def rhs(y, J):
        dy = VF.drift.value(y).copy() if VF.drift is not None else np.zeros(VF.e)
        M = VF.drift.jacobian(y) if VF.drift is not None else np.zeros((VF.e, VF.e))
        for si, field in zip(slope, VF.fields):
            if si != 0.0:
                dy += si * field.value(y)
                M = M + si * field.jacobian(y)
        return dy, M @ J

    return rhs


def _rk4(rhs, y, h, n):
    for _ in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)) or float(np.linalg.norm(y)) > BLOWUP_LIMIT:
            raise FloatingPointError("classical flow left the admissible region")
    return y


def _rk4_jac(rhs, y, J, h, n):
    for _ in range(n):
        k1, K1 = rhs(y, J)
        k2, K2 = rhs(y + 0.5 * h * k1, J + 0.5 * h * K1)
        k3, K3 = rhs(y + 0.5 * h * k2, J + 0.5 * h * K2)
        k4, K4 = rhs(y + h * k3, J + h * K3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        J = J + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        if not np.all(np.isfinite(y)) or float(np.linalg.norm(y)) > BLOWUP_LIMIT:
            raise FloatingPointError("classical flow left the admissible region")
    return y, J


def ode_flow(VF: VectorFieldSystem, x: PiecewisePath, y0, substeps: int = 8) -> np.ndarray:
    """dy = V_0(y) dt + V(y) dx integrated along the piecewise-linear driver;
    returns the state at every breakpoint of x."""
    if x.d != VF.d:
        raise ValueError(f"driver dimension {x.d} does not match system d={VF.d}")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    y = np.asarray(y0, dtype=float).copy()
    out = [y.copy()]
    for j in range(len(x.times) - 1):
        dt = x.times[j + 1] - x.times[j]
        slope = (x.values[j + 1] - x.values[j]) / dt
        y = _rk4(_segment_rhs(VF, slope), y, dt / substeps, substeps)
        out.append(y.copy())
    return np.vstack(out)


def jacobian_flow(VF: VectorFieldSystem, x: PiecewisePath, y0, substeps: int = 8):
    """Flow and first-variation Jacobian along the driver: J solves
    dJ/dt = [sum_i DV_i(y) x_i' + DV_0(y)] J from the identity; returns
    (states, jacobians) at every breakpoint of x."""
    if x.d != VF.d:
        raise ValueError(f"driver dimension {x.d} does not match system d={VF.d}")
    y = np.asarray(y0, dtype=float).copy()
    J = np.eye(VF.e)
    states, jacs = [y.copy()], [J.copy()]
    for j in range(len(x.times) - 1):
        dt = x.times[j + 1] - x.times[j]
        slope = (x.values[j + 1] - x.values[j]) / dt
        y, J = _rk4_jac(_segment_rhs_jac(VF, slope), y, J, dt / substeps, substeps)
        states.append(y.copy())
        jacs.append(J.copy())
    return np.vstack(states), np.stack(jacs)


def _reversed_system(VF: VectorFieldSystem) -> VectorFieldSystem:
    from .fields import ScaledField

    drift = ScaledField(VF.drift, -1.0) if VF.drift is not None else None
    return VectorFieldSystem(VF.fields, drift)


def inverse_jacobian_at(
    VF: VectorFieldSystem, x: PiecewisePath, y0, substeps: int = 8, method: str = "reverse"
) -> np.ndarray:
    """J_{t0 <- T}, the inverse of the endpoint Jacobian.

    ``reverse`` runs the variational flow along the time-reversed driver
    (with the drift negated) started at the endpoint state; ``solve`` inverts
    the forward Jacobian directly.  The two agree to integrator accuracy.
    """
    states, jacs = jacobian_flow(VF, x, y0, substeps)
    if method == "solve":
        return np.linalg.inv(jacs[-1])
    if method != "reverse":
        raise ValueError(f"unknown method {method!r}")
    back = path_reverse(x)
    _, jacs_back = jacobian_flow(_reversed_system(VF), back, states[-1], substeps)
    return jacs_back[-1]


# -- drifted equations through the driftless flow --------------------------------


def doss_sussmann_solve(
    VF: VectorFieldSystem,
    x: PiecewisePath,
    y0,
    z_substeps: int = 2,
    flow_substeps: int = 8,
) -> np.ndarray:
    """Solve dy = V_0(y) dt + V(y) dx as y_t = U_{t<-0}(z_t), where U is the
    driftless flow and the auxiliary state z solves

        dz/dt = J_{0<-t}(z_t) . V_0(U_{t<-0}(z_t)),   z_0 = y_0.

    Every right-hand-side evaluation integrates the driftless flow and its
    Jacobian from scratch and applies the inverse Jacobian; this is the
    honest form of the representation, cross-validated against direct
    classical integration in tests.  Returns the state at x's breakpoints.
    """
    if VF.drift is None:
        return ode_flow(VF, x, y0, flow_substeps)
    driftless = VectorFieldSystem(VF.fields, None)
    t0 = x.times[0]

    def zdot(t, z):
        if t <= t0 + 1e-14:
            return VF.drift.value(z)
        seg = path_restrict(x, t0, t)
        states, jacs = jacobian_flow(driftless, seg, z, flow_substeps)
        return np.linalg.solve(jacs[-1], VF.drift.value(states[-1]))

    z = np.asarray(y0, dtype=float).copy()
    z_at_breakpoints = [z.copy()]
    for j in range(len(x.times) - 1):
        h = (x.times[j + 1] - x.times[j]) / z_substeps
        t = x.times[j]
        for _ in range(z_substeps):
            k1 = zdot(t, z)
            k2 = zdot(t + 0.5 * h, z + 0.5 * h * k1)
            k3 = zdot(t + 0.5 * h, z + 0.5 * h * k2)
            k4 = zdot(t + h, z + h * k3)
            z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        z_at_breakpoints.append(z.copy())
    out = [np.asarray(y0, dtype=float).copy()]
    for j in range(1, len(x.times)):
        seg = path_restrict(x, t0, x.times[j])
        out.append(ode_flow(driftless, seg, z_at_breakpoints[j], flow_substeps)[-1])
    return np.vstack(out)
