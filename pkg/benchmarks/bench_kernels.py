"""Benchmark the numba kernels against their pure-NumPy fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--repeats 5]

Workloads mirror the package's hot paths: sweeping the test statistic,
the multi-row quadratic form, and the per-group interval bounds over an
exhaustively enumerated sign group.  With ARTCLUSTER_NO_NUMBA=1 (or
numba missing) only the NumPy column is reported.
"""

import argparse
import time

import numpy as np

from artcluster import kernels
from artcluster.groups import exhaustive_group


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def build_cases(rng):
    cases = []

    big = exhaustive_group(20)  # 1,048,576 sign vectors
    values = rng.standard_normal(20)
    cases.append(
        (
            "group_means q=20 (2^20 rows)",
            lambda: kernels.group_means_numpy(big.signs, values),
            (lambda: kernels.group_means_numba(big.signs, values))
            if kernels.NUMBA_ENABLED
            else None,
        )
    )

    weights = np.sqrt(rng.integers(5, 80, size=20).astype(float))
    wb = weights * rng.standard_normal(20)
    a = kernels.group_means_numpy(big.signs, weights)
    b = kernels.group_means_numpy(big.signs, wb)
    pm = np.all(big.signs == big.signs[:, :1], axis=1)
    cases.append(
        (
            "interval_bounds q=20 (2^20 rows)",
            lambda: kernels.interval_bounds_numpy(a, b, a[0], b[0], pm),
            (lambda: kernels.interval_bounds_numba(a, b, a[0], b[0], pm))
            if kernels.NUMBA_ENABLED
            else None,
        )
    )

    mid = exhaustive_group(14)  # 16,384 sign vectors
    scores = rng.standard_normal((14, 3))
    sigma_inv = np.linalg.inv(scores.T @ scores / 14)
    cases.append(
        (
            "group_wald q=14 p=3 (2^14 rows)",
            lambda: kernels.group_wald_quadratic_numpy(mid.signs, scores, sigma_inv),
            (lambda: kernels.group_wald_quadratic_numba(mid.signs, scores, sigma_inv))
            if kernels.NUMBA_ENABLED
            else None,
        )
    )
    return cases


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = build_cases(rng)

    print(f"backend available: {kernels.backend_name()}")
    header = f"{'kernel':<36} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, numpy_fn, numba_fn in cases:
        if numba_fn is not None:
            numba_fn()  # trigger jit compilation outside the timed region
        t_np = best_of(numpy_fn, args.repeats) * 1e3
        if numba_fn is None:
            print(f"{name:<36} {t_np:>10.2f} {'-':>10} {'-':>8}")
            continue
        t_nb = best_of(numba_fn, args.repeats) * 1e3
        print(f"{name:<36} {t_np:>10.2f} {t_nb:>10.2f} {t_np / t_nb:>7.1f}x")

        got_np = numpy_fn()
        got_nb = numba_fn()
        if isinstance(got_np, tuple):
            same = all(np.array_equal(x, y) for x, y in zip(got_np, got_nb))
        else:
            same = np.array_equal(got_np, got_nb)
        if not same:
            raise SystemExit(f"benchmark outputs diverged for {name}")


if __name__ == "__main__":
    main()
