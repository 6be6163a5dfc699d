"""Optional numba acceleration.

Set ``SGCN_DISABLE_NUMBA=1`` (before import) to force the pure-numpy kernels.
Both paths compute the same quantities; the numpy path is the reference.
"""
import os

_DISABLED = os.environ.get("SGCN_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def njit(func):
    """``numba.njit(cache=True)`` when available, identity otherwise."""
    if HAVE_NUMBA:
        return _njit(cache=True)(func)
    return func


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
