"""Optional numba acceleration.

Set ``ENTROPYTILE_DISABLE_NUMBA=1`` to force the pure-numpy code paths, e.g.
for debugging or on platforms without a working numba/llvmlite.
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("ENTROPYTILE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by ENTROPYTILE_DISABLE_NUMBA")
    from numba import njit as _numba_njit

    NUMBA_ENABLED = True
except ImportError:
    _numba_njit = None
    NUMBA_ENABLED = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if _numba_njit is not None:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorate(func):
        return func

    return decorate


def resolve_backend(backend: str | None) -> str:
    """Map a requested backend (None, "numba", "numpy") onto an available one."""
    if backend is None:
        return "numba" if NUMBA_ENABLED else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}; expected 'numba' or 'numpy'")
    if backend == "numba" and not NUMBA_ENABLED:
        raise RuntimeError("numba backend requested but numba is unavailable or disabled")
    return backend
