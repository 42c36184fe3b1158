"""Optional numba acceleration.

Set ``HMFLOW_DISABLE_NUMBA=1`` before import to run every kernel as plain
Python/NumPy. The numerical results are identical up to round-off; only
speed differs.
"""
import os

DISABLED = os.environ.get("HMFLOW_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False
    _njit = None


def njit(*args, **kwargs):
    """``numba.njit`` when available and enabled, identity otherwise."""
    if HAS_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap
