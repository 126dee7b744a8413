"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy
fallback. Callers go through the module-level functions here so that
:func:`use_backend` can switch implementations at runtime (tests and the
benchmark compare both).
"""
from __future__ import annotations

import contextlib

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on build
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

_active = _BACKENDS.get("cython", _kernels_py)


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend() -> str:
    return "cython" if _active is _compiled and _compiled is not None else "python"


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    _active = _BACKENDS[name]


@contextlib.contextmanager
def use_backend(name: str):
    previous = backend()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def logreg_ista(X, y, lam, max_iter, tol, w_init, b_init, record=False):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w_init = np.ascontiguousarray(w_init, dtype=np.float64)
    return _active.logreg_ista(X, y, float(lam), int(max_iter), float(tol),
                               w_init, float(b_init), bool(record))


def max_cluster_mass(stat, mask, min_len):
    stat = np.ascontiguousarray(stat, dtype=np.float64)
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    return _active.max_cluster_mass(stat, mask, int(min_len))


def bootstrap_means(trials, idx):
    trials = np.ascontiguousarray(trials, dtype=np.float64)
    idx = np.ascontiguousarray(idx, dtype=np.intp)
    return _active.bootstrap_means(trials, idx)
