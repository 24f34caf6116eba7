#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--size 100000]
"""

import argparse
import timeit

import numpy as np

from sharpefolio import _kernels_py, kernels


def bench(name, fn_native, fn_python, repeat):
    t_py = min(timeit.repeat(fn_python, number=1, repeat=repeat))
    if kernels.HAVE_NATIVE:
        t_nat = min(timeit.repeat(fn_native, number=1, repeat=repeat))
        speedup = t_py / t_nat if t_nat > 0 else float("inf")
        print(f"{name:<28} python {t_py * 1e3:9.3f} ms   "
              f"native {t_nat * 1e3:9.3f} ms   x{speedup:5.1f}")
    else:
        print(f"{name:<28} python {t_py * 1e3:9.3f} ms   (no compiled extension)")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--size", type=int, default=100_000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    curve = 100 * np.exp(np.cumsum(rng.normal(0, 0.01, args.size)))
    x = rng.normal(size=args.size)
    n = 50
    m = rng.normal(size=(n, n))
    A = m @ m.T + 1e-3 * np.eye(n)
    b = rng.normal(size=n)
    lo, hi = np.zeros(n), np.ones(n)
    lip = float(np.linalg.eigvalsh(A).max())
    w0 = np.full(n, 1.0 / n)
    v = rng.normal(0, 2, 1000)
    plo, phi = np.zeros(1000), np.full(1000, 0.01)

    if kernels.HAVE_NATIVE:
        from sharpefolio import _ckernels as nat
    else:
        nat = _kernels_py
        print("compiled extension not available; timing the fallback only\n")

    print(f"kernel implementation in use: {kernels.implementation()}\n")
    bench("max_drawdown",
          lambda: nat.max_drawdown(curve),
          lambda: _kernels_py.max_drawdown(curve), args.repeat)
    bench("rolling_mean_std (w=20)",
          lambda: nat.rolling_mean_std(x, 20),
          lambda: _kernels_py.rolling_mean_std(x, 20), args.repeat)
    bench("ewma",
          lambda: nat.ewma(x, 0.1),
          lambda: _kernels_py.ewma(x, 0.1), args.repeat)
    bench("wilder_rsi (w=14)",
          lambda: nat.wilder_rsi(curve, 14),
          lambda: _kernels_py.wilder_rsi(curve, 14), args.repeat)
    bench("project_capped_simplex",
          lambda: nat.project_capped_simplex(v, plo, phi),
          lambda: _kernels_py.project_capped_simplex(v, plo, phi), args.repeat)
    bench("pgd_quadratic (n=50)",
          lambda: nat.pgd_quadratic(A, b, lo, hi, lip, 10_000, 1e-10, w0),
          lambda: _kernels_py.pgd_quadratic(A, b, lo, hi, lip, 10_000, 1e-10, w0),
          args.repeat)


if __name__ == "__main__":
    main()
