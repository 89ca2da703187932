"""Backend selection for the compiled kernels.

Set ``LTBMAP_DISABLE_NUMBA=1`` to run the pure-numpy path. When numba is
not importable the pure path is used automatically.
"""

import os

_FLAG = "LTBMAP_DISABLE_NUMBA"


def _disabled() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = False
if not _disabled():
    try:
        from numba import njit as _njit

        USE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False


def jit(func):
    """Compile ``func`` with numba when enabled, else return it unchanged."""
    if USE_NUMBA:
        return _njit(cache=True)(func)
    return func


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
