"""Hot numeric kernels with a compiled extension and a NumPy fallback."""

from __future__ import annotations

try:  # pragma: no cover - exercised indirectly via backend_name()
    from ._schur import schur_pairs

    _BACKEND = "cython"
except ImportError:  # pragma: no cover
    from .fallback import schur_pairs

    _BACKEND = "numpy"

from .fallback import schur_pairs as schur_pairs_numpy

__all__ = ["schur_pairs", "schur_pairs_numpy", "backend_name"]


def backend_name() -> str:
    """Which Schur kernel is active: "cython" or "numpy"."""
    return _BACKEND
