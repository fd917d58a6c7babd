"""Simplex operations used by every optimistic-gradient update.

project_simplex is the sort-and-threshold Euclidean projection; mix_into is
the running weighted average (1 - alpha) * acc + alpha * sample that the
averaging players apply to both value tables and policies.
"""

import numpy as np

from . import _kernels


def project_simplex(v):
    """Euclidean projection of v onto the probability simplex.

    Accepts a 1-d vector or a 2-d array of rows; returns the same shape.
    Idempotent on simplex points, invariant to adding a constant to all
    entries, and non-expansive in l2. Non-finite input is a domain error.
    """
    a = np.asarray(v, dtype=np.float64)
    if a.ndim not in (1, 2):
        raise ValueError(f"expected a vector or array of rows, got ndim={a.ndim}")
    if a.shape[-1] < 1:
        raise ValueError("cannot project an empty vector")
    if not np.all(np.isfinite(a)):
        raise ValueError("cannot project non-finite values onto the simplex")
    if a.ndim == 1:
        return _kernels.project_simplex_1d(np.ascontiguousarray(a))
    return _kernels.project_rows(np.ascontiguousarray(a))


def mix_into(acc, sample, alpha):
    """Weighted average (1 - alpha) * acc + alpha * sample.

    With the stepsize sequence alpha_t = (H + 1) / (H + t) and alpha_1 = 1,
    repeated application reproduces the anytime weighted average of all
    samples seen so far.
    """
    acc = np.asarray(acc, dtype=np.float64)
    sample = np.asarray(sample, dtype=np.float64)
    if acc.shape != sample.shape:
        raise ValueError(f"shape mismatch: {acc.shape} vs {sample.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return (1.0 - alpha) * acc + alpha * sample
