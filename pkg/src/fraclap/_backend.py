"""Numba/NumPy backend selection for the hot assembly kernels.

The pure-NumPy path is always available; numba is used when importable
unless ``FRACLAP_NO_NUMBA`` is set to a truthy value.  ``FRACLAP_THREADS``
caps the number of worker threads used by the assembly driver (the chunk
partition is fixed, so results are bit-identical for any thread count).
"""

import os


def numba_enabled() -> bool:
    flag = os.environ.get("FRACLAP_NO_NUMBA", "")
    if flag.strip().lower() in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def thread_count() -> int:
    raw = os.environ.get("FRACLAP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def maybe_njit(func):
    """Apply ``numba.njit`` when the numba path is active."""
    if numba_enabled():
        import numba

        return numba.njit(cache=True, nogil=True)(func)
    return func
