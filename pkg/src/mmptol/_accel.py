"""Numba switch shared by the hot kernels.

Set ``MMPTOL_DISABLE_NUMBA=1`` to force the pure-numpy code paths. When
numba is not importable the numpy paths are used regardless.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("MMPTOL_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAVE_NUMBA:
        import numba
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn
    if args and callable(args[0]):
        return args[0]
    return wrap
