"""Backend switch for the hot loops.

Set ``PHASESENSE_DISABLE_NUMBA=1`` to run every kernel through its
vectorised numpy implementation instead of the numba-compiled loops.
"""

import os

_FLAG = os.environ.get("PHASESENSE_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def jit(func):
    """``numba.njit(cache=True)`` when available, identity otherwise."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)
