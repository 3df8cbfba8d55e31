"""Deterministic numeric substrate: stable log-sum-exp, small dense SVD,
clipped SGD steps, and seeded random draws.

All training math is float64. The random generator is PCG64; its name is
recorded in checkpoints so runs can be reproduced across platforms.
"""

import numpy as np

from .errors import UsageError

RNG_ALGORITHM = "pcg64"


class Rng:
    """Seeded random source. Identical seed gives identical draw sequences."""

    def __init__(self, seed):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform_int(self, lo, hi):
        return sample_uniform_int(self, lo, hi)

    def integers(self, n, size):
        """size indices uniform over [0, n)."""
        return self._gen.integers(0, n, size=size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def normal(self, shape, scale=1.0):
        return self._gen.normal(0.0, scale, size=shape)

    def uniform(self, size=None):
        return self._gen.random(size)

    def spawn(self):
        """Independent child stream, deterministic given this stream's state."""
        return Rng(int(self._gen.integers(0, 2**63)))


def log_sum_exp(v):
    """log(sum(exp(v))) with max-subtraction; v is a non-empty 1-d vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise UsageError("log_sum_exp of an empty vector")
    m = v.max()
    return float(m + np.log(np.exp(v - m).sum()))


def log_sum_exp_rows(m):
    """Row-wise log-sum-exp of a 2-d array, vectorized."""
    mx = m.max(axis=1, keepdims=True)
    return (mx + np.log(np.exp(m - mx).sum(axis=1, keepdims=True))).ravel()


def svd_square(m):
    """SVD of a square matrix: returns (U, sigma, V) with m = U @ diag(sigma) @ V.T.

    U and V are orthogonal, sigma nonincreasing and nonnegative.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise UsageError(f"svd_square needs a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise UsageError("svd_square input has non-finite entries")
    u, s, vh = np.linalg.svd(m)
    return u, s, vh.T


def global_grad_norm(grads):
    """L2 norm over every entry of a dict of gradient arrays."""
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    return float(np.sqrt(total))


def clipped_sgd_step(params, grads, lr, clip):
    """In-place SGD step with global-norm clipping.

    If the global gradient norm exceeds `clip`, every gradient is scaled by
    clip/norm before p -= lr * g. Mutates the arrays in `params` (aliased
    tensors stay aliased) and returns them.
    """
    if lr <= 0:
        raise UsageError("learning rate must be positive")
    if clip <= 0:
        raise UsageError("clip must be positive")
    missing = set(grads) - set(params)
    if missing:
        raise UsageError(f"gradients for unknown parameters: {sorted(missing)}")
    norm = global_grad_norm(grads)
    scale = clip / norm if norm > clip else 1.0
    for name, g in grads.items():
        p = params[name]
        if p.shape != g.shape:
            raise UsageError(f"shape mismatch for {name}: {p.shape} vs {g.shape}")
        p -= (lr * scale) * g
    return params


def sample_uniform_int(rng, lo, hi):
    """Uniform integer in [lo, hi] inclusive."""
    if lo > hi:
        raise UsageError(f"empty range [{lo}, {hi}]")
    return int(rng._gen.integers(lo, hi + 1))


def gaussian_init(rng, rows, cols, scale):
    """rows x cols matrix of i.i.d. normal(0, scale^2) entries, float64."""
    if scale <= 0:
        raise UsageError("scale must be positive")
    return rng.normal((rows, cols), scale)
