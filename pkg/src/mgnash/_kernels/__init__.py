"""Kernel backend selection.

The hot numeric loops exist twice: loop-style numba kernels
(`numba_impl`, njit-compiled, disk-cached) and a vectorized pure-numpy
fallback (`numpy_impl`). The active backend is chosen once at import from
the MGNASH_BACKEND environment variable:

    MGNASH_BACKEND=auto    use numba if importable, else numpy (default)
    MGNASH_BACKEND=numba   require numba, fail if unavailable
    MGNASH_BACKEND=numpy   force the pure-numpy path

Both modules stay importable directly for cross-checking and benchmarks.
"""

import os

_KERNEL_NAMES = [
    "project_simplex_1d",
    "project_rows",
    "marginal_min",
    "marginal_max",
    "chain_value",
    "policy_value",
    "bellman_q",
    "optimal_value",
    "joint_chain",
    "visitation_solve",
    "ogda_step",
    "avg_ogda_step",
    "actor_critic_step",
    "duality_gap",
    "matrix_game_solve",
]

_requested = os.environ.get("MGNASH_BACKEND", "auto").lower()

if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"MGNASH_BACKEND={_requested!r} not understood; use auto, numba or numpy"
    )

if _requested == "numpy":
    from . import numpy_impl as _impl

    BACKEND = "numpy"
else:
    try:
        from . import numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        from . import numpy_impl as _impl

        BACKEND = "numpy"

globals().update({name: getattr(_impl, name) for name in _KERNEL_NAMES})

__all__ = _KERNEL_NAMES + ["BACKEND"]
