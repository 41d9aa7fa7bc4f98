"""Seeded Euler-Maruyama simulation of the population and representative
player, discounted cost estimation with a reported tail bound, and the 1-D
empirical quadratic Wasserstein distance.

Feedback controls are affine, a(x, m, t) = fx*x + fm*m + offset(t): every
equilibrium and every in-scope perturbation has this shape, and it is what
the compiled kernels consume.  All noise is drawn from counter-based streams
keyed by (seed, stream, path index) so that any single path can be replayed
bit-exactly in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from . import _kernels, rng
from .errors import DivergedError
from .master import QuadraticValue
from .model import LQModel

# Paths simulated per noise block; bounds peak memory of the noise buffer.
PATH_CHUNK = 4096


@dataclass(frozen=True)
class InitialLaw:
    """Initial state distribution: dirac, gaussian or empirical."""

    kind: str
    x0: float = 0.0
    mean_: float = 0.0
    sd: float = 0.0
    samples: np.ndarray | None = None

    @classmethod
    def dirac(cls, x0: float) -> "InitialLaw":
        return cls(kind="dirac", x0=float(x0))

    @classmethod
    def gaussian(cls, mean: float, sd: float) -> "InitialLaw":
        if sd < 0:
            raise ValueError("standard deviation must be nonnegative")
        return cls(kind="gaussian", mean_=float(mean), sd=float(sd))

    @classmethod
    def empirical(cls, samples) -> "InitialLaw":
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
            raise ValueError("empirical law needs a nonempty finite 1-D sample array")
        return cls(kind="empirical", samples=arr)

    @property
    def mean(self) -> float:
        if self.kind == "dirac":
            return self.x0
        if self.kind == "gaussian":
            return self.mean_
        return float(self.samples.mean())

    @property
    def second_moment(self) -> float:
        if self.kind == "dirac":
            return self.x0 * self.x0
        if self.kind == "gaussian":
            return self.mean_ * self.mean_ + self.sd * self.sd
        return float(np.mean(self.samples**2))

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF; the empirical kind uses the order statistics."""
        u = np.asarray(u, dtype=float)
        if self.kind == "dirac":
            return np.full_like(u, self.x0)
        if self.kind == "gaussian":
            return self.mean_ + self.sd * ndtri(np.clip(u, 2.5e-17, 1 - 1e-16))
        return np.quantile(self.samples, u)

    def sample(self, n: int, seed: int) -> np.ndarray:
        if self.kind == "dirac":
            return np.full(n, self.x0)
        if self.kind == "empirical" and n == self.samples.size:
            # the ensemble itself, in order: exact pass-through
            return self.samples.copy()
        gen = rng.make_generator(seed, rng.STREAM_INITIAL)
        if self.kind == "gaussian":
            return self.mean_ + self.sd * gen.standard_normal(n)
        return gen.choice(self.samples, size=n, replace=True)


@dataclass(frozen=True)
class AffineFeedback:
    """Control a(x, m, t) = fx*x + fm*m + offset(t)."""

    fx: float
    fm: float
    offset: Callable[[np.ndarray], np.ndarray] | None = None

    @classmethod
    def equilibrium(cls, model: LQModel, U: QuadraticValue) -> "AffineFeedback":
        """alpha_hat(x, dU/dx) = -b3 (2 a1 x + a2 m) / (2C)."""
        return cls(
            fx=-model.b3 * U.a1 / model.C,
            fm=-model.b3 * U.a2 / (2.0 * model.C),
        )

    def with_offset(self, offset: Callable) -> "AffineFeedback":
        return AffineFeedback(self.fx, self.fm, offset)

    def scaled(self, gain: float) -> "AffineFeedback":
        return AffineFeedback(gain * self.fx, gain * self.fm, self.offset)

    def offsets_on(self, times: np.ndarray) -> np.ndarray:
        if self.offset is None:
            return np.zeros(times.shape[0])
        return np.asarray(self.offset(times), dtype=float) * np.ones(times.shape[0])

    def __call__(self, x, m, t=0.0):
        off = 0.0 if self.offset is None else self.offset(t)
        return self.fx * x + self.fm * m + off


@dataclass(frozen=True)
class ParticleEnsemble:
    particles: np.ndarray

    def __post_init__(self):
        if self.particles.ndim != 1 or self.particles.size < 2:
            raise ValueError("ensemble needs at least two particles")

    @property
    def n(self) -> int:
        return self.particles.size

    def mean(self) -> float:
        return float(self.particles.mean())

    def var(self) -> float:
        return float(self.particles.var())

    def second_moment(self) -> float:
        return float(np.mean(self.particles**2))


@dataclass(frozen=True)
class PopulationPath:
    """Full ensemble history of the coupled particle system."""

    times: np.ndarray
    states: np.ndarray  # (n_steps+1, N)
    means: np.ndarray  # (n_steps+1,)
    seed: int

    @property
    def n_particles(self) -> int:
        return self.states.shape[1]

    def ensemble(self, k: int) -> ParticleEnsemble:
        return ParticleEnsemble(self.states[k])

    def variances(self) -> np.ndarray:
        return self.states.var(axis=1)


@dataclass(frozen=True)
class TrajectoryBatch:
    """Independent representative paths against a frozen mean flow."""

    times: np.ndarray
    costs: np.ndarray  # per-path discounted running cost
    terminal: np.ndarray
    seed: int
    model: LQModel
    feedback: AffineFeedback
    mean_flow: np.ndarray
    states: np.ndarray | None = None  # (n_paths, n_steps+1) when kept
    controls: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.costs.size

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class CostEstimate:
    mean: float
    std_error: float
    ci95: tuple[float, float]
    tail_bound: float
    n_paths: int


def _time_grid(T: float, dt: float) -> np.ndarray:
    n_steps = int(round(T / dt))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")
    return dt * np.arange(n_steps + 1)


def simulate_population(
    model: LQModel,
    feedback: AffineFeedback,
    law0: InitialLaw,
    N: int,
    T: float,
    dt: float,
    seed: int,
    noise_scale: float = 1.0,
) -> PopulationPath:
    """Synchronous particle approximation of the self-interacting dynamics.

    The mean-field coupling is the same-ensemble empirical mean, recomputed
    once per step.  Particle i consumes the counter-based noise stream
    (seed, STREAM_POPULATION, i).
    """
    if N < 1:
        raise ValueError("population needs at least one particle")
    times = _time_grid(T, dt)
    n_steps = times.size - 1
    states = np.empty((n_steps + 1, N))
    states[0] = law0.sample(N, seed)
    noise = rng.gaussian_block(seed, rng.STREAM_POPULATION, 0, N, n_steps)
    if noise_scale != 1.0:
        noise *= noise_scale
    off = feedback.offsets_on(times[:-1])
    means, dstep = _kernels.population_kernel(
        states, noise, dt, math.sqrt(dt),
        model.b1, model.b2, model.b3, feedback.fx, feedback.fm, off,
    )
    if dstep >= 0:
        raise DivergedError(dstep)
    return PopulationPath(times=times, states=states, means=means, seed=seed)


def simulate_representative(
    model: LQModel,
    feedback: AffineFeedback,
    x0,
    mean_flow,
    T: float,
    dt: float,
    seed: int,
    n_paths: int = 1,
    noise_scale: float = 1.0,
    keep_states: bool = False,
    stream: int = rng.STREAM_PATHS,
    path_offset: int = 0,
) -> TrajectoryBatch:
    """Paths that react to, but do not influence, the supplied mean flow.

    ``mean_flow`` is a callable of t, a scalar, or an array on the time grid.
    Path j consumes the noise stream (seed, stream, path_offset + j), so two
    calls with the same seed are driven by common random numbers.
    """
    times = _time_grid(T, dt)
    n_steps = times.size - 1
    if callable(mean_flow):
        mflow = np.asarray([mean_flow(t) for t in times], dtype=float)
    else:
        mflow = np.broadcast_to(np.asarray(mean_flow, dtype=float), times.shape).copy()
    if mflow.size != times.size:
        raise ValueError("mean flow does not cover the time grid")

    x0s = np.broadcast_to(np.asarray(x0, dtype=float), (n_paths,)).copy()
    off = feedback.offsets_on(times[:-1])
    disc = np.exp(-model.r * times[:-1])
    sdt = math.sqrt(dt)

    costs = np.empty(n_paths)
    terminal = np.empty(n_paths)
    states = np.empty((n_paths, n_steps + 1)) if keep_states else None
    dummy = np.empty((0, 0))

    for lo in range(0, n_paths, PATH_CHUNK):
        hi = min(lo + PATH_CHUNK, n_paths)
        noise = rng.gaussian_block(seed, stream, path_offset + lo, hi - lo, n_steps)
        if noise_scale != 1.0:
            noise *= noise_scale
        chunk_states = states[lo:hi] if keep_states else dummy
        c, term, dstep = _kernels.representative_kernel(
            x0s[lo:hi], mflow, off, noise, dt, sdt, disc,
            model.b1, model.b2, model.b3, model.b4, model.A, model.C,
            feedback.fx, feedback.fm, chunk_states, keep_states,
        )
        if dstep >= 0:
            raise DivergedError(dstep)
        costs[lo:hi] = c
        terminal[lo:hi] = term

    controls = None
    if keep_states:
        controls = feedback.fx * states + feedback.fm * mflow[None, :]
        full_off = np.append(off, off[-1] if off.size else 0.0)
        controls += full_off[None, :]
    return TrajectoryBatch(
        times=times, costs=costs, terminal=terminal, seed=seed, model=model,
        feedback=feedback, mean_flow=mflow, states=states, controls=controls,
    )


def estimate_cost(model: LQModel, batch: TrajectoryBatch) -> CostEstimate:
    """Mean discounted cost with a reported (not added) truncation tail bound.

    The tail bound integrates a coefficient-wise quadratic envelope of the
    cost rate from the horizon onward, assuming the terminal second moment
    and mean do not grow (valid for stable feedback):
    |f| <= c1*x^2 + cm*m^2 + c0 with the control eliminated through the
    affine feedback.
    """
    if batch.n_paths < 2:
        raise ValueError("need at least two paths for a standard error")
    mean = float(batch.costs.mean())
    se = float(batch.costs.std(ddof=1) / math.sqrt(batch.n_paths))
    fb = batch.feedback
    off_max = float(np.max(np.abs(fb.offsets_on(batch.times[:-1])))) if fb.offset else 0.0
    c1 = model.A + abs(model.b4) / 2.0 + 3.0 * model.C * fb.fx**2
    cm = abs(model.b4) / 2.0 + 3.0 * model.C * fb.fm**2
    c0 = 3.0 * model.C * off_max**2
    m2_T = float(np.mean(batch.terminal**2))
    mbar_T2 = float(batch.mean_flow[-1] ** 2)
    tail = math.exp(-model.r * batch.horizon) * (c0 + c1 * m2_T + cm * mbar_T2) / model.r
    return CostEstimate(
        mean=mean,
        std_error=se,
        ci95=(mean - 1.96 * se, mean + 1.96 * se),
        tail_bound=tail,
        n_paths=batch.n_paths,
    )


def w2_empirical(samples_a, samples_b) -> float:
    """Quadratic Wasserstein distance between two equal-size samples.

    In one dimension the optimal coupling pairs order statistics.
    """
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("need two 1-D sample arrays of identical nonzero length")
    qa = np.sort(a)
    qb = np.sort(b)
    return float(np.sqrt(np.mean((qa - qb) ** 2)))


def default_horizon(model: LQModel, cx: float) -> float:
    """Truncation horizon: max(6/r, 10/|cx|) for closed-loop rate cx < 0."""
    return max(6.0 / model.r, 10.0 / max(abs(cx), 1e-3))


def export_flow_csv(path: PopulationPath) -> list[tuple]:
    """Rows (t, mean, var, q05, q95) for CSV export."""
    var = path.variances()
    q05 = np.quantile(path.states, 0.05, axis=1)
    q95 = np.quantile(path.states, 0.95, axis=1)
    return [
        (float(t), float(m), float(v), float(a), float(b))
        for t, m, v, a, b in zip(path.times, path.means, var, q05, q95)
    ]
