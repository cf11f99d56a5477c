"""Numba on/off switch.

Hot kernels are written twice: a scalar/loop version compiled with
``@njit`` and a vectorized numpy version.  Setting the environment
variable ``FPF_PURE_NUMPY=1`` (or numba failing to import) routes every
dispatcher through the numpy path.  ``benchmarks/kernel_bench.py``
compares the two.
"""

import os

__all__ = ["NUMBA_ENABLED", "maybe_njit"]


def _env_disabled() -> bool:
    return os.environ.get("FPF_PURE_NUMPY", "0").lower() in ("1", "true", "yes")


try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and not _env_disabled()


def maybe_njit(*args, **kwargs):
    """``@njit`` when numba is active, identity decorator otherwise."""
    if NUMBA_ENABLED:
        return _njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def wrap(func):
        return func

    return wrap
