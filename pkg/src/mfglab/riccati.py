"""Finite-horizon backward ODE oracle for the decoupling coefficients.

The adjoint admits the linear ansatz Y_t = p_t * X_t + q_t * mbar_t.
Coefficient matching gives the backward system

    dp/dt = (r - 2 b1) p + (b3^2 / 2C) p^2 - 2 A
    dq/dt = (r - 2 b1 - b2) q - b4 - b2 p + (b3^2 / 2C) (2 p q + q^2)

with zero terminal condition.  Its rest points correspond exactly to the
algebraic system's (a1, a2) under (p, q) = (2 a1, a2); that equivalence is
asserted on every solve, since the ODE system itself has no independent
written source.  Integration is fixed-step RK4 (deterministic, order 4).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError
from .master import QuadraticValue, solve_root_system
from .model import LQModel

_BLOWUP_LIMIT = 1e8
_STATIONARITY_TOL = 1e-8


@dataclass(frozen=True)
class RiccatiPath:
    times: np.ndarray
    p: np.ndarray
    q: np.ndarray

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def at(self, t: float) -> tuple[float, float]:
        """Linear interpolation of (p, q) at time t."""
        return (
            float(np.interp(t, self.times, self.p)),
            float(np.interp(t, self.times, self.q)),
        )


def _rhs(model: LQModel, p: float, q: float) -> tuple[float, float]:
    gain = model.control_gain
    dp = (model.r - 2.0 * model.b1) * p + gain * p * p - 2.0 * model.A
    dq = (
        (model.r - 2.0 * model.b1 - model.b2) * q
        - model.b4
        - model.b2 * p
        + gain * (2.0 * p * q + q * q)
    )
    return dp, dq


def stationarity_selfcheck(model: LQModel, tol: float = _STATIONARITY_TOL) -> None:
    """Assert the rest points of the ODE field match the algebraic roots.

    Raises AssertionError when any (a1, a2) root fails to annihilate the
    field under (p, q) = (2 a1, a2).
    """
    for U in solve_root_system(model):
        dp, dq = _rhs(model, 2.0 * U.a1, U.a2)
        if abs(dp) > tol or abs(dq) > tol:
            raise AssertionError(
                f"ODE rest point mismatch at (a1, a2) = ({U.a1:g}, {U.a2:g}): "
                f"field = ({dp:.3e}, {dq:.3e})"
            )


def riccati_backward(model: LQModel, T: float, dt: float) -> RiccatiPath:
    """Integrate backward from (p, q)(T) = (0, 0) with RK4."""
    if not (T > 0 and dt > 0 and dt <= T / 10.0):
        raise ValueError("need T > 0 and dt <= T/10")
    stationarity_selfcheck(model)
    n_steps = int(round(T / dt))
    times = dt * np.arange(n_steps + 1)
    p = np.empty(n_steps + 1)
    q = np.empty(n_steps + 1)
    p[n_steps] = 0.0
    q[n_steps] = 0.0
    h = -dt  # integrating in decreasing time
    for k in range(n_steps, 0, -1):
        pk, qk = p[k], q[k]
        k1p, k1q = _rhs(model, pk, qk)
        k2p, k2q = _rhs(model, pk + 0.5 * h * k1p, qk + 0.5 * h * k1q)
        k3p, k3q = _rhs(model, pk + 0.5 * h * k2p, qk + 0.5 * h * k2q)
        k4p, k4q = _rhs(model, pk + h * k3p, qk + h * k3q)
        p[k - 1] = pk + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        q[k - 1] = qk + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        if abs(p[k - 1]) > _BLOWUP_LIMIT or abs(q[k - 1]) > _BLOWUP_LIMIT:
            raise BlowUpError(times[k - 1])
    return RiccatiPath(times=times, p=p, q=q)


def stationary_match(path: RiccatiPath, U: QuadraticValue, tol: float) -> bool:
    """Did the backward integration settle on the candidate's coefficients?"""
    return abs(path.p[0] - 2.0 * U.a1) <= tol and abs(path.q[0] - U.a2) <= tol
