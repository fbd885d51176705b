"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise, or when
``APASQUEEZE_PURE_PYTHON=1`` is set, the numpy implementation is used.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and os.environ.get("APASQUEEZE_PURE_PYTHON", "") != "1":
    BACKEND = "cython"
    _impl = _compiled
else:
    BACKEND = "python"
    _impl = _kernels_py

#: Amplitudes whose remaining tail norm is below this are dropped before projecting.
TAIL_TRIM = 1e-16


def available_backends() -> dict:
    """Map backend name to module for every backend importable in this build."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def trimmed_length(amps: np.ndarray, tol: float = TAIL_TRIM) -> int:
    """Smallest ``L`` such that ``||amps[L:]|| < tol`` (at least 1)."""
    tail = np.sqrt(np.cumsum(np.abs(amps[::-1]) ** 2))[::-1]
    keep = np.nonzero(tail >= tol)[0]
    return int(keep[-1]) + 1 if keep.size else 1


def coherent_overlaps(gammas, amps, backend: str | None = None) -> np.ndarray:
    """``<gamma|psi>`` for a 1-D array of labels and number-basis amplitudes."""
    gammas = np.ascontiguousarray(gammas, dtype=np.complex128)
    amps = np.ascontiguousarray(amps, dtype=np.complex128)
    if gammas.ndim != 1 or amps.ndim != 1:
        raise ValueError("coherent_overlaps expects 1-D arrays")
    if amps.size == 0:
        raise ValueError("coherent_overlaps: empty state")
    amps = np.ascontiguousarray(amps[: trimmed_length(amps)])
    impl = _impl if backend is None else available_backends()[backend]
    return impl.coherent_overlaps(gammas, amps)
