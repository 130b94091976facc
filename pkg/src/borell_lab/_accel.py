"""Numba switch.

Hot kernels are compiled with numba when it is importable, unless the
environment variable ``BORELL_LAB_DISABLE_NUMBA`` is set to a truthy value.
Both paths stay importable so they can be compared directly.
"""

from __future__ import annotations

import os



def _flag_set(value: str) -> bool:
    return value.strip().lower() in {"1", "true", "yes", "on"}


_DISABLED = _flag_set(os.environ.get("BORELL_LAB_DISABLE_NUMBA", ""))

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if _numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
