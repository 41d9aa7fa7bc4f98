"""Counter-based random streams: reproducible regardless of scheduling.

Every stream is a Philox generator keyed by (seed, stream, index), so any
path's noise can be regenerated in isolation — paired-comparison and
replay-a-single-particle workflows depend on this.  Gaussians come from the
inverse CDF applied to the raw uniform stream.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# Stream ids, to keep independent uses of the same seed disjoint.
STREAM_PATHS = 0
STREAM_INITIAL = 1
STREAM_POPULATION = 2
STREAM_CHECKS = 3

_MIX = 0x9E3779B97F4A7C15  # splitmix64 increment, key whitening
_MASK = (1 << 64) - 1


def _key(seed: int, stream: int, index: int) -> np.ndarray:
    k0 = (((seed & _MASK) * _MIX) & _MASK) ^ (stream & _MASK)
    k1 = index & _MASK
    return np.array([k0, k1], dtype=np.uint64)


def make_generator(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=_key(seed, stream, index)))


def gaussian_block(
    seed: int, stream: int, first_index: int, n_rows: int, n_cols: int
) -> np.ndarray:
    """(n_rows, n_cols) standard normals; row i is the stream of
    (seed, stream, first_index + i), independent of how rows are grouped."""
    out = np.empty((n_rows, n_cols))
    for i in range(n_rows):
        u = make_generator(seed, stream, first_index + i).random(n_cols)
        # random() can return exactly 0.0, where the inverse CDF is -inf.
        np.clip(u, 2.5e-17, None, out=u)
        out[i] = ndtri(u)
    return out
