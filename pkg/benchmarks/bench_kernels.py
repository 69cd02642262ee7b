"""Benchmark the numba-jitted kernels against the pure-numpy fallbacks.

Usage:
    python3 benchmarks/bench_kernels.py [--repeats N]

Both implementations live in ``tabtext._kernels``; at import time the module
picks the jitted path unless ``TABTEXT_NUMBA=0`` is set. This script imports
the private names directly so it can time the two paths in one process, and it
first checks that they agree numerically.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from tabtext._kernels import HAS_NUMBA, _logistic_gd_np, _weighted_sum_np

if HAS_NUMBA:
    from tabtext._kernels import _logistic_gd_nb, _weighted_sum_nb


def timeit(fn, *args, repeats: int) -> float:
    fn(*args)  # warm up (triggers JIT compilation on the numba path)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_weighted_sum(rng: np.random.Generator, repeats: int) -> None:
    print("\nweighted_sum (rows x dim, best of %d):" % repeats)
    for n, d in [(100, 768), (1_000, 768), (10_000, 768), (1_000, 4_096)]:
        vectors = rng.normal(size=(n, d))
        weights = rng.uniform(0.1, 10.0, size=n)
        t_np = timeit(_weighted_sum_np, vectors, weights, repeats=repeats)
        line = f"  {n:>6} x {d:<5} numpy {t_np * 1e3:8.3f} ms"
        if HAS_NUMBA:
            np.testing.assert_allclose(
                _weighted_sum_nb(vectors, weights),
                _weighted_sum_np(vectors, weights),
                rtol=1e-10,
            )
            t_nb = timeit(_weighted_sum_nb, vectors, weights, repeats=repeats)
            line += f"   numba {t_nb * 1e3:8.3f} ms   speedup {t_np / t_nb:5.2f}x"
        print(line)


def bench_logistic_gd(rng: np.random.Generator, repeats: int) -> None:
    print("\nlogistic_gd (n x d, 500 steps, best of %d):" % repeats)
    for n, d in [(200, 50), (1_272, 768), (1_272, 3_072)]:
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(np.float64)
        args = (X, y, 500, 0.1, 1e-4)
        t_np = timeit(_logistic_gd_np, *args, repeats=repeats)
        line = f"  {n:>6} x {d:<5} numpy {t_np * 1e3:8.1f} ms"
        if HAS_NUMBA:
            w_nb, b_nb = _logistic_gd_nb(*args)
            w_np, b_np = _logistic_gd_np(*args)
            np.testing.assert_allclose(w_nb, w_np, rtol=1e-8, atol=1e-10)
            np.testing.assert_allclose(b_nb, b_np, rtol=1e-8, atol=1e-10)
            t_nb = timeit(_logistic_gd_nb, *args, repeats=repeats)
            line += f"   numba {t_nb * 1e3:8.1f} ms   speedup {t_np / t_nb:5.2f}x"
        print(line)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"numba available: {HAS_NUMBA}")
    if not HAS_NUMBA:
        print("(set TABTEXT_NUMBA=1 / install numba to benchmark the jitted path)")
    rng = np.random.default_rng(0)
    bench_weighted_sum(rng, args.repeats)
    bench_logistic_gd(rng, args.repeats)


if __name__ == "__main__":
    main()
