"""Numba switch.

Hot loops are written twice: a numba ``@njit`` kernel and a pure-numpy
version. ``USE_NUMBA`` picks which one the public API dispatches to.
Set ``CHVLAB_DISABLE_JIT=1`` to force the numpy path (also used when numba
is not importable).
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

_FLAG = os.environ.get("CHVLAB_DISABLE_JIT", "").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(fn):
    """Compile ``fn`` in nopython mode, or return it untouched when JIT is off."""
    if not USE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
