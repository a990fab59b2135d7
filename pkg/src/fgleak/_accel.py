"""Optional numba acceleration.

Set ``FGLEAK_DISABLE_NUMBA=1`` to force the pure-numpy code paths (useful for
debugging, or on platforms without numba).
"""

from __future__ import annotations

import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested() -> bool:
    return os.environ.get("FGLEAK_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    if _numba_requested():
        import numba as _numba
    else:
        _numba = None
except ImportError:  # pragma: no cover
    _numba = None

NUMBA_ENABLED = _numba is not None


def njit(fn):
    """``numba.njit(cache=True, nogil=True)`` or identity when numba is off."""
    if _numba is None:
        return fn
    return _numba.njit(cache=True, nogil=True)(fn)
