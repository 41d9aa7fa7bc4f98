"""Claim-checking harness: optimality, stationarity, consistency identities,
the adjoint representation, weak uniqueness and value-function Lipschitz
continuity — each reduced to a seeded, tolerance-bearing numerical check.

All paired cost comparisons run under common random numbers: the perturbed
control is simulated against byte-identical noise streams, so the per-path
cost differences carry orders of magnitude less variance than the costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from . import rng
from .master import QuadraticValue, is_admissible
from .model import LQModel, closed_loop_coeffs, hamiltonian_H_dx
from .riccati import riccati_backward
from .simulate import (
    AffineFeedback,
    CostEstimate,
    InitialLaw,
    TrajectoryBatch,
    estimate_cost,
    simulate_population,
    simulate_representative,
)


@dataclass(frozen=True)
class MCConfig:
    T: float = 6.0
    dt: float = 1e-3
    n_paths: int = 10_000
    seed: int = 0
    x0: float = 0.0


@dataclass(frozen=True)
class PairedComparison:
    label: str
    estimate: CostEstimate
    delta_mean: float
    delta_ci: tuple[float, float]
    delta_se: float


@dataclass(frozen=True)
class NashReport:
    base_cost: CostEstimate
    perturbed: tuple[PairedComparison, ...]
    all_non_negative: bool


@dataclass(frozen=True)
class UniquenessReport:
    estimate_a: tuple[float, float]  # (mean, std error)
    estimate_b: tuple[float, float]
    overlap_z: float
    ks_statistic: float
    ks_critical_1pct: float
    passed: bool


def _require_admissible(model: LQModel, U: QuadraticValue) -> None:
    if not is_admissible(model, U):
        raise ValueError("candidate is not admissible for this model")


def equilibrium_mean_flow(model: LQModel, U: QuadraticValue, m0: float):
    """Analytic population mean under equilibrium: m(t) = m0 * exp((cx+cm) t)."""
    cx, cm = closed_loop_coeffs(model, U)
    rate = cx + cm
    return lambda t: m0 * np.exp(rate * np.asarray(t))


def _paired(
    model: LQModel,
    base: AffineFeedback,
    other: AffineFeedback,
    mean_flow,
    mc: MCConfig,
) -> tuple[TrajectoryBatch, TrajectoryBatch]:
    common = dict(x0=mc.x0, mean_flow=mean_flow, T=mc.T, dt=mc.dt,
                  seed=mc.seed, n_paths=mc.n_paths)
    return (
        simulate_representative(model, base, **common),
        simulate_representative(model, other, **common),
    )


def verify_nash(
    model: LQModel,
    U: QuadraticValue,
    perturbations,
    mc: MCConfig,
    m0: float = 0.0,
) -> NashReport:
    """Paired cost comparison of the equilibrium against each perturbation.

    ``perturbations`` is a list of (label, feedback) pairs; build them with
    ``offset_perturbation`` or ``gain_perturbation``.  The population stays
    at equilibrium (a single player's deviation does not move the flow).
    """
    _require_admissible(model, U)
    base_fb = AffineFeedback.equilibrium(model, U)
    mean_flow = equilibrium_mean_flow(model, U, m0)
    base = simulate_representative(
        model, base_fb, x0=mc.x0, mean_flow=mean_flow, T=mc.T, dt=mc.dt,
        seed=mc.seed, n_paths=mc.n_paths,
    )
    base_est = estimate_cost(model, base)
    rows = []
    ok = True
    for label, fb in perturbations:
        pert = simulate_representative(
            model, fb, x0=mc.x0, mean_flow=mean_flow, T=mc.T, dt=mc.dt,
            seed=mc.seed, n_paths=mc.n_paths,
        )
        diff = pert.costs - base.costs
        dm = float(diff.mean())
        dse = float(diff.std(ddof=1) / math.sqrt(diff.size))
        ci = (dm - 1.96 * dse, dm + 1.96 * dse)
        rows.append(PairedComparison(
            label=label, estimate=estimate_cost(model, pert),
            delta_mean=dm, delta_ci=ci, delta_se=dse,
        ))
        if ci[0] <= -3.0 * dse:
            ok = False
    return NashReport(base_cost=base_est, perturbed=tuple(rows), all_non_negative=ok)


def offset_perturbation(model: LQModel, U: QuadraticValue, offset) -> AffineFeedback:
    """Equilibrium feedback plus a deterministic time offset on the control."""
    fb = AffineFeedback.equilibrium(model, U)
    if not callable(offset):
        value = float(offset)
        return fb.with_offset(lambda t: value)
    return fb.with_offset(offset)


def gain_perturbation(model: LQModel, U: QuadraticValue, gain: float) -> AffineFeedback:
    """Equilibrium feedback with both coefficients scaled."""
    return AffineFeedback.equilibrium(model, U).scaled(gain)


def gateaux_slope(
    model: LQModel,
    U: QuadraticValue,
    direction,
    epsilons,
    mc: MCConfig,
    m0: float = 0.0,
) -> list[tuple[float, float]]:
    """Finite-difference directional derivatives of the cost at equilibrium.

    ``direction`` is a bounded deterministic function of t (or a constant).
    Returns (epsilon, (J(eps) - J(0)) / eps) pairs; slopes of a quadratic
    cost are linear in epsilon and vanish at the minimum.
    """
    _require_admissible(model, U)
    if not callable(direction):
        g = float(direction)
        direction = lambda t: g * np.ones_like(np.asarray(t, dtype=float))
    base_fb = AffineFeedback.equilibrium(model, U)
    mean_flow = equilibrium_mean_flow(model, U, m0)
    base = simulate_representative(
        model, base_fb, x0=mc.x0, mean_flow=mean_flow, T=mc.T, dt=mc.dt,
        seed=mc.seed, n_paths=mc.n_paths,
    )
    out = []
    for eps in epsilons:
        fb = base_fb.with_offset(lambda t, e=eps: e * direction(t))
        pert = simulate_representative(
            model, fb, x0=mc.x0, mean_flow=mean_flow, T=mc.T, dt=mc.dt,
            seed=mc.seed, n_paths=mc.n_paths,
        )
        delta = float((pert.costs - base.costs).mean())
        out.append((float(eps), delta / eps if eps != 0.0 else 0.0))
    return out


def flow_consistency(
    model: LQModel,
    U: QuadraticValue,
    law0: InitialLaw,
    N: int,
    seed: int,
    T: float,
    dt: float,
    flow_perturbation: float = 0.0,
) -> float:
    """Replay each population particle as a representative player.

    The particle is restarted from its own draw, against the frozen
    population mean flow and its own noise stream; the identity says the
    two recursions coincide.  ``flow_perturbation`` deliberately biases the
    frozen flow (sensitivity guard for tests).
    """
    _require_admissible(model, U)
    fb = AffineFeedback.equilibrium(model, U)
    pop = simulate_population(model, fb, law0, N, T, dt, seed)
    mflow = pop.means + flow_perturbation
    max_dev = 0.0
    for i in range(N):
        rep = simulate_representative(
            model, fb, x0=pop.states[0, i], mean_flow=mflow, T=T, dt=dt,
            seed=seed, n_paths=1, keep_states=True,
            stream=rng.STREAM_POPULATION, path_offset=i,
        )
        max_dev = max(max_dev, float(np.max(np.abs(rep.states[0] - pop.states[:, i]))))
    return max_dev


def y_representation_check(
    model: LQModel,
    U: QuadraticValue,
    pop_states: np.ndarray,
    mean_flow: np.ndarray,
    times: np.ndarray,
) -> float:
    """Max gap between the gradient-field adjoint and the finite-horizon
    ODE-oracle adjoint along simulated paths, away from the horizon.

    Construction (a): dU/dx(X_t, m_t) = 2 a1 X_t + a2 m_t.
    Construction (b): p_t X_t + q_t m_t with (p, q) integrated backward on
    the matching horizon.  Compared on [0, T-2] to skip the terminal
    boundary layer of (b).
    """
    T = float(times[-1])
    dt = float(times[1] - times[0])
    if pop_states.shape[0] != times.size:
        raise ValueError("state history does not cover the time grid")
    path = riccati_backward(model, T, min(dt, T / 10.0))
    cut = times <= T - 2.0
    p = np.interp(times[cut], path.times, path.p)
    q = np.interp(times[cut], path.times, path.q)
    m = mean_flow[cut]
    x = pop_states[cut]
    y_analytic = 2.0 * U.a1 * x + U.a2 * m[:, None]
    y_oracle = p[:, None] * x + (q * m)[:, None]
    return float(np.max(np.abs(y_analytic - y_oracle)))


def _value_estimate(
    model: LQModel,
    U: QuadraticValue,
    x: float,
    mean_flow: np.ndarray,
    T: float,
    dt: float,
    seed: int,
    n_paths: int,
) -> tuple[float, float, np.ndarray]:
    """Monte Carlo estimate of the initial adjoint Y_0 at state x.

    Uses the discounted backward representation along equilibrium paths:
    Y_0 = E[ e^{-rT} Y_T + int_0^T e^{-rt} dH/dx(X_t, m_t, Y_t) dt ] with
    Y_t read off the gradient field.  Returns (mean, std error, terminals).
    """
    fb = AffineFeedback.equilibrium(model, U)
    batch = simulate_representative(
        model, fb, x0=x, mean_flow=mean_flow, T=T, dt=dt, seed=seed,
        n_paths=n_paths, keep_states=True,
    )
    times = batch.times
    m = batch.mean_flow
    X = batch.states  # (n_paths, nt)
    Y = 2.0 * U.a1 * X + U.a2 * m[None, :]
    dhx = hamiltonian_H_dx(model, X, m[None, :], Y)
    disc = np.exp(-model.r * times)
    functional = (disc[None, :-1] * dhx[:, :-1]).sum(axis=1) * dt + disc[-1] * Y[:, -1]
    mean = float(functional.mean())
    se = float(functional.std(ddof=1) / math.sqrt(n_paths))
    return mean, se, batch.terminal


def weak_uniqueness_check(
    model: LQModel,
    U: QuadraticValue,
    x: float,
    law: InitialLaw,
    seeds: tuple[int, int],
    mc: MCConfig,
    n_particles: int = 4000,
    law_b_shift: float = 0.0,
) -> UniquenessReport:
    """Statistical surrogate for weak uniqueness.

    Two pathwise-different but equal-in-law initial ensembles are built by
    antithetic inverse-CDF sampling over a midpoint grid; the populations
    evolve under independent Brownian seeds.  The initial adjoint estimate
    at state x and the terminal state distributions must then agree up to
    Monte Carlo noise.  ``law_b_shift`` deliberately breaks equality in law
    (adversarial control for tests).
    """
    _require_admissible(model, U)
    if law.kind == "empirical":
        raise ValueError("weak uniqueness check needs an invertible CDF law")
    u_grid = (np.arange(n_particles) + 0.5) / n_particles
    xi_a = law.quantile(u_grid)
    xi_b = law.quantile(1.0 - u_grid) + law_b_shift
    fb = AffineFeedback.equilibrium(model, U)
    s_a, s_b = seeds

    results = []
    for xi, seed in ((xi_a, s_a), (xi_b, s_b)):
        pop = simulate_population(
            model, fb, InitialLaw.empirical(xi), n_particles, mc.T, mc.dt, seed
        )
        mean, se, _ = _value_estimate(
            model, U, x, pop.means, mc.T, mc.dt, seed, mc.n_paths
        )
        results.append((mean, se, pop.states[-1]))

    (mean_a, se_a, term_a), (mean_b, se_b, term_b) = results
    denom = math.hypot(se_a, se_b)
    z = abs(mean_a - mean_b) / denom if denom > 0 else 0.0
    ks = ks_2samp(term_a, term_b)
    critical = math.sqrt(-math.log(0.01 / 2.0) / 2.0) * math.sqrt(2.0 / n_particles)
    passed = z <= 3.0 and ks.statistic < critical
    return UniquenessReport(
        estimate_a=(mean_a, se_a),
        estimate_b=(mean_b, se_b),
        overlap_z=float(z),
        ks_statistic=float(ks.statistic),
        ks_critical_1pct=float(critical),
        passed=passed,
    )


def lipschitz_scan(model: LQModel, U: QuadraticValue, probes) -> float:
    """Max difference quotient of the gradient field over probe pairs.

    Probes are ((x, m), (x', m')) pairs; measures shifted in mean have
    quadratic Wasserstein distance |m - m'|.  Coincident pairs are skipped.
    """
    if not probes:
        raise ValueError("need at least one probe pair")
    worst = 0.0
    for (x, m), (xp, mp) in probes:
        denom = abs(x - xp) + abs(m - mp)
        if denom == 0.0:
            continue
        num = abs(U.dx(x, m) - U.dx(xp, mp))
        worst = max(worst, num / denom)
    return worst
