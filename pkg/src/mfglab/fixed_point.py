"""Mean field game as a fixed point of the consistency map.

One sweep of the map: freeze the population mean flow, solve the backward
quasilinear PDE for the decoupling field u(t, x) (the adjoint given the
state), then push particles forward under the induced drift and read off
the new mean flow.  The outer loop damps the update until the flow is
self-consistent.

The backward PDE is

    du/dt + g(x, m_t, u) du/dx + 1/2 d2u/dx2 + s(x, m_t, u) - r u = 0

with g = b1 x + b2 m - (b3^2/2C) u (the closed-loop drift) and
s = b1 u + b4 m + 2 A x, terminal condition at the truncation horizon.
Discretization: upwind advection and source explicit, diffusion implicit
(tridiagonal solve per step), zero-curvature extrapolation at the space
boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import _kernels, rng
from .errors import DivergedError, StepTooLargeError
from .master import select_admissible, solve_root_system
from .model import LQModel
from .simulate import InitialLaw


@dataclass(frozen=True)
class MeanFlow:
    times: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.m.shape or not np.all(np.isfinite(self.m)):
            raise ValueError("mean flow must be finite on the time grid")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @classmethod
    def constant(cls, T: float, dt: float, value: float) -> "MeanFlow":
        times = dt * np.arange(int(round(T / dt)) + 1)
        return cls(times=times, m=np.full(times.shape, float(value)))


@dataclass(frozen=True)
class DecouplingField:
    times: np.ndarray
    x: np.ndarray
    u: np.ndarray  # (nt, nx)

    def at_time_index(self, k: int) -> np.ndarray:
        return self.u[k]


@dataclass(frozen=True)
class FixedPointConfig:
    T: float
    dt: float
    x_lo: float
    x_hi: float
    dx: float
    N: int
    damping: float = 0.5
    tol: float = 1e-2
    max_iter: int = 30
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")
        if self.tol <= 0 or self.max_iter < 1 or self.N < 2:
            raise ValueError("invalid fixed-point configuration")


@dataclass(frozen=True)
class FixedPointReport:
    iterations: int
    flow_delta: float
    converged: bool
    final_flow: MeanFlow
    final_field: DecouplingField
    deltas: tuple[float, ...]


def space_grid(x_lo: float, x_hi: float, dx: float) -> np.ndarray:
    n = int(round((x_hi - x_lo) / dx))
    if n < 4:
        raise ValueError("space grid too coarse")
    return x_lo + dx * np.arange(n + 1)


def default_space_grid(model: LQModel, law0: InitialLaw, dx: float = 0.05) -> np.ndarray:
    """Mean +- 6 stationary standard deviations of the equilibrium dynamics."""
    try:
        U = select_admissible(model, solve_root_system(model))
        cx = model.b1 - model.b3 * model.b3 * U.a1 / model.C
        sd = np.sqrt(1.0 / (2.0 * abs(cx)))
    except Exception:
        sd = 1.0
    center = law0.mean
    half = max(6.0 * sd, 3.0 * abs(center), 3.0)
    return space_grid(center - half, center + half, dx)


def backward_field_solve(
    model: LQModel,
    flow: MeanFlow,
    grid: np.ndarray,
    terminal,
) -> DecouplingField:
    """Backward finite-difference solve of the decoupling-field PDE.

    ``terminal`` is a callable of x giving u at the truncation horizon.
    """
    x = np.asarray(grid, dtype=float)
    nx = x.size
    dx = float(x[1] - x[0])
    dt = flow.dt
    nt = flow.times.size
    gain = model.control_gain

    u = np.empty((nt, nx))
    u[-1] = np.asarray(terminal(x), dtype=float) * np.ones(nx)

    # constant implicit-diffusion operator (interior rows)
    lam = dt / (2.0 * dx * dx)
    ab = np.zeros((3, nx - 2))
    ab[0, 1:] = -lam
    ab[1, :] = 1.0 + 2.0 * lam
    ab[2, :-1] = -lam

    for k in range(nt - 2, -1, -1):
        uk1 = u[k + 1]
        m = flow.m[k + 1]
        g = model.b1 * x + model.b2 * m - gain * uk1
        if np.max(np.abs(g)) * dt / dx > 1.0:
            raise StepTooLargeError(
                f"advection CFL violated at step {k}: max|g|*dt/dx = "
                f"{np.max(np.abs(g)) * dt / dx:.3f} > 1"
            )
        # upwind first derivative
        dudx = np.empty(nx)
        dudx[1:-1] = np.where(
            g[1:-1] > 0.0,
            (uk1[1:-1] - uk1[:-2]) / dx,
            (uk1[2:] - uk1[1:-1]) / dx,
        )
        dudx[0] = (uk1[1] - uk1[0]) / dx
        dudx[-1] = (uk1[-1] - uk1[-2]) / dx
        src = model.b1 * uk1 + model.b4 * m + 2.0 * model.A * x
        explicit = uk1 + dt * (g * dudx + src - model.r * uk1)
        # boundary nodes: zero curvature, fully explicit
        u[k, 0] = explicit[0]
        u[k, -1] = explicit[-1]
        rhs = explicit[1:-1].copy()
        rhs[0] += lam * u[k, 0]
        rhs[-1] += lam * u[k, -1]
        u[k, 1:-1] = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(u[k])):
            raise DivergedError(k)
    return DecouplingField(times=flow.times, x=x, u=u)


def forward_flow_update(
    model: LQModel,
    field: DecouplingField,
    law0: InitialLaw,
    N: int,
    seed: int,
) -> MeanFlow:
    """Particle update of the mean flow under the field-induced drift."""
    times = field.times
    n_steps = times.size - 1
    dt = float(times[1] - times[0])
    x0 = law0.sample(N, seed)
    noise = rng.gaussian_block(seed, rng.STREAM_POPULATION, 0, N, n_steps)
    means, _terminal, dstep = _kernels.forward_field_kernel(
        x0, field.u, field.x, noise, dt, np.sqrt(dt),
        model.b1, model.b2, model.control_gain,
    )
    if dstep >= 0:
        raise DivergedError(dstep)
    return MeanFlow(times=times, m=means)


def stationary_terminal(model: LQModel, flow: MeanFlow):
    """Terminal condition: the stationary field when the model admits one,
    zero otherwise.  Removes the backward boundary layer."""
    try:
        U = select_admissible(model, solve_root_system(model))
    except Exception:
        return lambda x: np.zeros_like(x)
    m_T = float(flow.m[-1])
    return lambda x: 2.0 * U.a1 * x + U.a2 * m_T


def solve_mfg(
    model: LQModel, law0: InitialLaw, config: FixedPointConfig
) -> FixedPointReport:
    """Damped iteration of the consistency map from a constant initial flow.

    The particle seed is held fixed across iterations, so the iterated map
    is deterministic and its fixed point does not depend on the damping.
    """
    grid = space_grid(config.x_lo, config.x_hi, config.dx)
    flow = MeanFlow.constant(config.T, config.dt, law0.mean)
    field = None
    deltas = []
    converged = False
    theta = config.damping
    for it in range(1, config.max_iter + 1):
        field = backward_field_solve(model, flow, grid, stationary_terminal(model, flow))
        update = forward_flow_update(model, field, law0, config.N, config.seed)
        # convergence is judged on the undamped residual of the consistency
        # map, so runs with different damping stop within tol of the same
        # fixed point
        delta = float(np.max(np.abs(update.m - flow.m)))
        new_m = (1.0 - theta) * flow.m + theta * update.m
        deltas.append(delta)
        flow = MeanFlow(times=flow.times, m=new_m)
        if delta <= config.tol:
            converged = True
            break
    # field consistent with the final flow
    field = backward_field_solve(model, flow, grid, stationary_terminal(model, flow))
    return FixedPointReport(
        iterations=len(deltas),
        flow_delta=deltas[-1],
        converged=converged,
        final_flow=flow,
        final_field=field,
        deltas=tuple(deltas),
    )
