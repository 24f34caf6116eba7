# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Mirrors the pure-NumPy fallback in ``_kernels_py``; both must agree to
float precision (tests/test_kernels.py).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, NAN, INFINITY

cnp.import_array()


def max_drawdown(double[::1] values):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef double peak = values[0]
    cdef double worst = 0.0
    cdef double dd
    for i in range(n):
        if values[i] > peak:
            peak = values[i]
        dd = (peak - values[i]) / peak
        if dd > worst:
            worst = dd
    return worst


def rolling_mean_std(double[::1] x, int window):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = n - window + 1
    if m <= 0:
        return np.empty(0), np.empty(0)
    mean_arr = np.empty(m, dtype=np.float64)
    std_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] mean = mean_arr
    cdef double[::1] std = std_arr
    cdef Py_ssize_t i, j
    cdef double s, mu, acc, d, var
    for i in range(m):
        s = 0.0
        for j in range(i, i + window):
            s += x[j]
        mu = s / window
        acc = 0.0
        for j in range(i, i + window):
            d = x[j] - mu
            acc += d * d
        var = acc / (window - 1)
        if var < 0.0:
            var = 0.0
        mean[i] = mu
        std[i] = sqrt(var)
    return mean_arr, std_arr


def ewma(double[::1] x, double alpha):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    if n == 0:
        return out_arr
    cdef double acc = x[0]
    out[0] = acc
    for i in range(1, n):
        acc += alpha * (x[i] - acc)
        out[i] = acc
    return out_arr


cdef inline double _rsi_value(double ag, double al) nogil:
    if al == 0.0:
        return 100.0 if ag > 0.0 else 50.0
    return 100.0 - 100.0 / (1.0 + ag / al)


def wilder_rsi(double[::1] prices, int window):
    cdef Py_ssize_t i, n = prices.shape[0]
    out_arr = np.full(n, np.nan)
    cdef double[::1] out = out_arr
    if n <= window:
        return out_arr
    cdef double ag = 0.0, al = 0.0, d
    for i in range(window):
        d = prices[i + 1] - prices[i]
        if d > 0:
            ag += d
        else:
            al -= d
    ag /= window
    al /= window
    out[window] = _rsi_value(ag, al)
    for i in range(window, n - 1):
        d = prices[i + 1] - prices[i]
        ag = (ag * (window - 1) + (d if d > 0 else 0.0)) / window
        al = (al * (window - 1) + (-d if d < 0 else 0.0)) / window
        out[i + 1] = _rsi_value(ag, al)
    return out_arr


cdef void _project(double[::1] v, double[::1] lo, double[::1] hi,
                   double[::1] out) nogil:
    # bisection on tau: sum(clip(v - tau, lo, hi)) = 1
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double tau_lo = INFINITY, tau_hi = -INFINITY
    cdef double tau, s, w, resid
    cdef Py_ssize_t nfree
    for i in range(n):
        if v[i] - hi[i] < tau_lo:
            tau_lo = v[i] - hi[i]
        if v[i] - lo[i] > tau_hi:
            tau_hi = v[i] - lo[i]
    cdef int it
    for it in range(100):
        tau = 0.5 * (tau_lo + tau_hi)
        s = 0.0
        for i in range(n):
            w = v[i] - tau
            if w < lo[i]:
                w = lo[i]
            elif w > hi[i]:
                w = hi[i]
            s += w
        if s > 1.0:
            tau_lo = tau
        else:
            tau_hi = tau
    tau = 0.5 * (tau_lo + tau_hi)
    s = 0.0
    nfree = 0
    for i in range(n):
        w = v[i] - tau
        if w < lo[i]:
            w = lo[i]
        elif w > hi[i]:
            w = hi[i]
        out[i] = w
        s += w
        if lo[i] + 1e-12 < w < hi[i] - 1e-12:
            nfree += 1
    resid = 1.0 - s
    if nfree > 0:
        for i in range(n):
            if lo[i] + 1e-12 < out[i] < hi[i] - 1e-12:
                out[i] += resid / nfree
                if out[i] < lo[i]:
                    out[i] = lo[i]
                elif out[i] > hi[i]:
                    out[i] = hi[i]


def project_capped_simplex(double[::1] v, double[::1] lo, double[::1] hi):
    out_arr = np.empty(v.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    _project(v, lo, hi, out)
    return out_arr


def pgd_quadratic(double[:, ::1] A, double[::1] b, double[::1] lo,
                  double[::1] hi, double lipschitz, int max_iter,
                  double tol, double[::1] w0):
    """Minimize 0.5 w'Aw + b'w over the capped simplex (FISTA + restart)."""
    cdef Py_ssize_t i, j, n = b.shape[0]
    w_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] w = w_arr
    y_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] y = y_arr
    grad_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    wn_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] w_new = wn_arr
    tmp_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] tmp = tmp_arr

    cdef double step = 1.0 / (lipschitz if lipschitz > 1e-300 else 1e-300)
    cdef double theta = 1.0, theta_new, f_w, f_new, change, g, c, mom
    cdef int it

    _project(w0, lo, hi, w)
    for i in range(n):
        y[i] = w[i]
    f_w = _objective(A, b, w)
    change = INFINITY
    for it in range(1, max_iter + 1):
        _grad(A, b, y, grad)
        for i in range(n):
            tmp[i] = y[i] - step * grad[i]
        _project(tmp, lo, hi, w_new)
        f_new = _objective(A, b, w_new)
        if f_new > f_w:
            theta = 1.0
            _grad(A, b, w, grad)
            for i in range(n):
                tmp[i] = w[i] - step * grad[i]
            _project(tmp, lo, hi, w_new)
            f_new = _objective(A, b, w_new)
        change = 0.0
        for i in range(n):
            c = fabs(w_new[i] - w[i])
            if c > change:
                change = c
        theta_new = 0.5 * (1.0 + sqrt(1.0 + 4.0 * theta * theta))
        mom = (theta - 1.0) / theta_new
        for i in range(n):
            y[i] = w_new[i] + mom * (w_new[i] - w[i])
            w[i] = w_new[i]
        f_w = f_new
        theta = theta_new
        if change < tol:
            return w_arr, it, change
    return w_arr, max_iter, change


cdef void _grad(double[:, ::1] A, double[::1] b, double[::1] x,
                double[::1] out) nogil:
    cdef Py_ssize_t i, j, n = b.shape[0]
    cdef double s
    for i in range(n):
        s = b[i]
        for j in range(n):
            s += A[i, j] * x[j]
        out[i] = s


cdef double _objective(double[:, ::1] A, double[::1] b, double[::1] x) nogil:
    cdef Py_ssize_t i, j, n = b.shape[0]
    cdef double q = 0.0, lin = 0.0, s
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += A[i, j] * x[j]
        q += x[i] * s
        lin += b[i] * x[i]
    return 0.5 * q + lin
