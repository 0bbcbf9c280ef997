"""Kernel backend selection.

The numeric inner loops (forward kinematics, Jacobian assembly, the QP
active-set iteration) are written once in numpy and compiled with numba
when available. Set ``POSEFUSE_BACKEND=numpy`` to force the interpreted
fallback, ``POSEFUSE_BACKEND=numba`` to require the compiled path.
"""

import os

_requested = os.environ.get("POSEFUSE_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"POSEFUSE_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    _numba = None
else:
    try:
        import numba as _numba
    except ImportError:
        if _requested == "numba":
            raise
        _numba = None

BACKEND = "numba" if _numba is not None else "numpy"


def jit_kernel(func):
    """Compile a hot kernel, or return it unchanged on the numpy backend."""
    if _numba is None:
        return func
    return _numba.njit(cache=True, fastmath=False)(func)
