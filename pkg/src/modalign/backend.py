"""Kernel backend selection.

Hot kernels ship in two variants: a numba ``@njit`` version and a pure-numpy
fallback. Both produce identical indices, tie order, and (up to the fixed
float64 reduction contract) identical similarity values. The active backend
is chosen at import time from the ``MODALIGN_DISABLE_NUMBA`` environment
variable and can be flipped at runtime for benchmarking.
"""

from __future__ import annotations

import os

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

_numba_enabled = HAS_NUMBA and os.environ.get("MODALIGN_DISABLE_NUMBA", "") not in (
    "1",
    "true",
    "yes",
)


def numba_enabled() -> bool:
    """Whether the numba kernel variants are dispatched."""
    return _numba_enabled


def set_numba(enabled: bool) -> None:
    """Switch kernel backend at runtime (used by tests and benchmarks)."""
    global _numba_enabled
    if enabled and not HAS_NUMBA:
        raise RuntimeError("numba is not importable in this environment")
    _numba_enabled = enabled


def set_threads(n: int) -> None:
    """Limit numba's thread pool; no-op on the numpy backend."""
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    if HAS_NUMBA:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
