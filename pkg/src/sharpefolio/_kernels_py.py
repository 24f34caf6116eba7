"""Pure-NumPy implementations of the hot kernels.

Used when the compiled extension (``sharpefolio._ckernels``) is not
available.  Both implementations must agree to float precision; see
tests/test_kernels.py for the parity suite and benchmarks/bench_kernels.py
for timings.
"""

from __future__ import annotations

import numpy as np


def max_drawdown(values: np.ndarray) -> float:
    """Largest peak-to-trough drop of an equity curve, single pass."""
    values = np.asarray(values, dtype=np.float64)
    peaks = np.maximum.accumulate(values)
    return float(np.max((peaks - values) / peaks))


def rolling_mean_std(x: np.ndarray, window: int):
    """Rolling mean and sample (n-1) std over every full window.

    Returns two arrays of length ``len(x) - window + 1``.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    m = n - window + 1
    if m <= 0:
        return np.empty(0), np.empty(0)
    # two-pass per window via stride tricks keeps precision comparable to
    # the compiled kernel (cumsum tricks lose digits on long series)
    win = np.lib.stride_tricks.sliding_window_view(x, window)
    mean = win.mean(axis=1)
    var = ((win - mean[:, None]) ** 2).sum(axis=1) / (window - 1)
    return mean, np.sqrt(np.maximum(var, 0.0))


def ewma(x: np.ndarray, alpha: float) -> np.ndarray:
    """Recursive exponential moving average, y[0] = x[0]."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    if x.size == 0:
        return out
    acc = x[0]
    out[0] = acc
    for i in range(1, x.size):
        acc += alpha * (x[i] - acc)
        out[i] = acc
    return out


def wilder_rsi(prices: np.ndarray, window: int) -> np.ndarray:
    """RSI with Wilder smoothing; first ``window`` entries are NaN."""
    p = np.asarray(prices, dtype=np.float64)
    n = p.size
    out = np.full(n, np.nan)
    if n <= window:
        return out
    delta = np.diff(p)
    gain = np.where(delta > 0, delta, 0.0)
    loss = np.where(delta < 0, -delta, 0.0)
    ag = gain[:window].mean()
    al = loss[:window].mean()
    out[window] = _rsi_value(ag, al)
    for i in range(window, n - 1):
        ag = (ag * (window - 1) + gain[i]) / window
        al = (al * (window - 1) + loss[i]) / window
        out[i + 1] = _rsi_value(ag, al)
    return out


def _rsi_value(avg_gain: float, avg_loss: float) -> float:
    if avg_loss == 0.0:
        return 100.0 if avg_gain > 0.0 else 50.0
    return 100.0 - 100.0 / (1.0 + avg_gain / avg_loss)


def project_capped_simplex(v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w : sum w = 1, lo <= w <= hi}.

    Exact breakpoint walk on g(tau) = sum(clip(v - tau, lo, hi)), which is
    piecewise linear and non-increasing in tau.  Caller guarantees
    sum(lo) <= 1 <= sum(hi).
    """
    v = np.asarray(v, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    taus = np.concatenate((v - hi, v - lo))
    # -1: coordinate leaves its upper cap (slope decreases by 1)
    # +1: coordinate clamps at its lower bound (slope increases by 1)
    kinds = np.concatenate((np.full(v.size, -1.0), np.full(v.size, 1.0)))
    order = np.argsort(taus, kind="stable")
    taus = taus[order]
    kinds = kinds[order]

    g = float(hi.sum())
    slope = 0.0
    tau_prev = taus[0]
    tau_star = taus[-1]
    found = False
    for tau_k, kind in zip(taus, kinds):
        g_k = g + slope * (tau_k - tau_prev)
        if g_k <= 1.0:
            tau_star = tau_prev if slope == 0.0 else tau_prev + (1.0 - g) / slope
            found = True
            break
        g = g_k
        tau_prev = tau_k
        slope += kind
    if not found:
        tau_star = tau_prev
    w = np.clip(v - tau_star, lo, hi)
    # polish the budget on the free set (numerical residue only)
    free = (w > lo + 1e-12) & (w < hi - 1e-12)
    resid = 1.0 - w.sum()
    if free.any():
        w[free] += resid / free.sum()
    return np.clip(w, lo, hi)


def pgd_quadratic(A: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                  lipschitz: float, max_iter: int, tol: float, w0: np.ndarray):
    """Minimize 0.5 w'Aw + b'w over the capped simplex.

    Accelerated projected gradient with monotone restart.  Returns
    (w, iterations, last_change).
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    step = 1.0 / max(lipschitz, 1e-300)
    w = project_capped_simplex(np.asarray(w0, dtype=np.float64), lo, hi)
    y = w.copy()
    theta = 1.0
    f_w = 0.5 * w @ A @ w + b @ w
    change = np.inf
    for it in range(1, max_iter + 1):
        grad = A @ y + b
        w_new = project_capped_simplex(y - step * grad, lo, hi)
        f_new = 0.5 * w_new @ A @ w_new + b @ w_new
        if f_new > f_w:  # restart momentum from the last good point
            y = w.copy()
            theta = 1.0
            grad = A @ y + b
            w_new = project_capped_simplex(y - step * grad, lo, hi)
            f_new = 0.5 * w_new @ A @ w_new + b @ w_new
        change = float(np.max(np.abs(w_new - w)))
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        y = w_new + ((theta - 1.0) / theta_new) * (w_new - w)
        w = w_new
        f_w = f_new
        theta = theta_new
        if change < tol:
            return w, it, change
    return w, max_iter, change
