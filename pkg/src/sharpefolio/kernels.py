"""Kernel dispatch: compiled extension if built, NumPy fallback otherwise.

``HAVE_NATIVE`` tells you which one you got; ``implementation()`` names it.
Set the environment variable SHARPEFOLIO_PURE_PYTHON=1 to force the
fallback (useful for the parity tests and benchmarks).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("SHARPEFOLIO_PURE_PYTHON"):
    _impl = _kernels_py
    HAVE_NATIVE = False
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
        HAVE_NATIVE = True
    except ImportError:
        _impl = _kernels_py
        HAVE_NATIVE = False


def implementation() -> str:
    return "native" if HAVE_NATIVE else "python"


def _c(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def max_drawdown(values) -> float:
    return float(_impl.max_drawdown(_c(values)))


def rolling_mean_std(x, window: int):
    return _impl.rolling_mean_std(_c(x), int(window))


def ewma(x, alpha: float) -> np.ndarray:
    return np.asarray(_impl.ewma(_c(x), float(alpha)))


def wilder_rsi(prices, window: int) -> np.ndarray:
    return np.asarray(_impl.wilder_rsi(_c(prices), int(window)))


def project_capped_simplex(v, lo, hi) -> np.ndarray:
    return np.asarray(_impl.project_capped_simplex(_c(v), _c(lo), _c(hi)))


def pgd_quadratic(A, b, lo, hi, lipschitz: float, max_iter: int, tol: float, w0):
    w, iters, change = _impl.pgd_quadratic(
        np.ascontiguousarray(A, dtype=np.float64), _c(b), _c(lo), _c(hi),
        float(lipschitz), int(max_iter), float(tol), _c(w0))
    return np.asarray(w), int(iters), float(change)
