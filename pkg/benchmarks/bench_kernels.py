"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs both backends on identical inputs, checks they agree to roundoff,
and prints particle-step throughput.  Usage:

    python3 benchmarks/bench_kernels.py [--paths 20000] [--steps 2000]
"""

import argparse
import math
import time

import numpy as np

from mfglab import _kernels
from mfglab.rng import gaussian_block


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def bench_population(n_particles, n_steps):
    noise = gaussian_block(1, 2, 0, n_particles, n_steps)
    dt, sdt = 1e-3, math.sqrt(1e-3)
    off = np.zeros(n_steps)
    args = (noise, dt, sdt, 0.0, 0.0, 2.0, -1.0, 0.0, off)

    def run(kernel):
        states = np.empty((n_steps + 1, n_particles))
        states[0] = 1.0
        return kernel(states, *args)

    run(_kernels._population_nb)  # warm the JIT cache
    (means_nb, _), t_nb = timed(run, _kernels._population_nb)
    (means_np, _), t_np = timed(run, _kernels._population_np)
    err = np.max(np.abs(means_nb - means_np))
    rate = n_particles * n_steps / t_nb
    print(f"population  numba {t_nb:8.3f}s  numpy {t_np:8.3f}s  "
          f"speedup {t_np / t_nb:5.1f}x  agree {err:.2e}  "
          f"({rate / 1e6:.0f}M particle-steps/s)")


def bench_representative(n_paths, n_steps):
    noise = gaussian_block(2, 0, 0, n_paths, n_steps)
    dt, sdt = 1e-3, math.sqrt(1e-3)
    x0 = np.zeros(n_paths)
    mflow = np.zeros(n_steps + 1)
    off = np.zeros(n_steps)
    disc = np.exp(-2.0 * dt * np.arange(n_steps))
    dummy = np.empty((0, 0))
    args = (x0, mflow, off, noise, dt, sdt, disc,
            0.0, 0.0, 2.0, 0.0, 2.0, 1.0, -1.0, 0.0, dummy, False)

    _kernels._representative_nb(*args)  # warm the JIT cache
    (c_nb, _, _), t_nb = timed(_kernels._representative_nb, *args)
    (c_np, _, _), t_np = timed(_kernels._representative_np, *args)
    err = np.max(np.abs(c_nb - c_np))
    rate = n_paths * n_steps / t_nb
    print(f"paths+cost  numba {t_nb:8.3f}s  numpy {t_np:8.3f}s  "
          f"speedup {t_np / t_nb:5.1f}x  agree {err:.2e}  "
          f"({rate / 1e6:.0f}M path-steps/s)")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--paths", type=int, default=20000)
    parser.add_argument("--steps", type=int, default=2000)
    args = parser.parse_args()
    if not _kernels.NUMBA_ENABLED:
        raise SystemExit("numba backend disabled (MFGLAB_NO_NUMBA set); "
                         "nothing to compare")
    bench_population(args.paths, args.steps)
    bench_representative(args.paths, args.steps)


if __name__ == "__main__":
    main()
