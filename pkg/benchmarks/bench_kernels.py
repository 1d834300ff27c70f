"""Time each kernel under the numba and numpy backends.

    python benchmarks/bench_kernels.py [--size N] [--repeat R]

The first numba call of each kernel (compilation or cache load) is excluded.
"""

import argparse
import time

import numpy as np

from selinfer import use_backend
from selinfer.kernels import lasso_cd, toy_reject_batch, truncnorm_cdf_sf, uniform_block, winner_counts
from selinfer.simlab import liu_design


def cases(n):
    ids = np.arange(n, dtype=np.uint64)
    u = uniform_block(1, ids, 2, 0, open_interval=True)
    p100 = uniform_block(2, ids[: max(n // 100, 1)], 100, 0, open_interval=True)
    x = np.linspace(-8, 8, n)
    X = liu_design(0.95)
    y = np.array([9.87, 0.0]) + np.random.default_rng(0).normal(size=(max(n // 10, 1), 2))
    return {
        "uniform_block": lambda: uniform_block(3, ids, 4),
        "truncnorm_cdf_sf": lambda: truncnorm_cdf_sf(x, 0.3, 1.0, -1.0, 2.0, x > 0),
        "toy_reject_batch": lambda: toy_reject_batch(u[:, 0], u[:, 1], 0.7, 0.3, 4),
        "winner_counts": lambda: winner_counts(p100, 0.05),
        "lasso_cd": lambda: lasso_cd(X.T @ X, y @ X, 0.2, 1e-10, 100_000),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    results = {}
    for backend in ("numba", "numpy"):
        with use_backend(backend):
            for name, fn in cases(args.size).items():
                fn()
                results[(name, backend)] = best_of(fn, args.repeat)
    print(f"{'kernel':<18} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for name in cases(1):
        a, b = results[(name, "numba")], results[(name, "numpy")]
        print(f"{name:<18} {a:>10.4f} {b:>10.4f} {b / a:>8.1f}")


if __name__ == "__main__":
    main()
