"""Optional numba support.

Set ``LOWWEIGHT_DISABLE_JIT=1`` to force the numpy/scipy fallback kernels
even when numba is importable.
"""
import os

_disabled = os.environ.get("LOWWEIGHT_DISABLE_JIT", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _disabled:
        raise ImportError("jit disabled by LOWWEIGHT_DISABLE_JIT")
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when available, identity otherwise."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _njit(*args, **kwargs)
