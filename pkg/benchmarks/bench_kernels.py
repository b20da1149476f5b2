#!/usr/bin/env python3
"""Benchmark the compiled distance kernels against the pure-Python fallback.

Times the three kernel operations at several problem sizes and prints a
table with the speedup of the compiled extension over the numpy/scipy
fallback. Run directly:

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from wsboost.kernels import BACKEND, _fallback

try:
    from wsboost.kernels import _core
except ImportError:
    _core = None


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def run_case(name, make_args, impl_fn, repeats):
    args = make_args()
    rows = []
    fallback_fn = getattr(_fallback, impl_fn)
    t_py = best_time(lambda: fallback_fn(*args), repeats)
    if _core is not None:
        compiled_fn = getattr(_core, impl_fn)
        t_c = best_time(lambda: compiled_fn(*args), repeats)
        rows.append((name, t_py, t_c, t_py / t_c))
    else:
        rows.append((name, t_py, None, None))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = []
    for n, d in ((500, 16), (1500, 16), (1500, 128)):
        x = np.ascontiguousarray(rng.normal(size=(n, d)))
        cases += run_case(
            f"mean_pairwise_distance  n={n:<5} d={d}",
            lambda x=x: (x,),
            "mean_pairwise_distance",
            args.repeats,
        )
    for m in (100_000, 2_000_000):
        x = np.ascontiguousarray(rng.normal(size=(2000, 16)))
        ii = rng.integers(0, 2000, size=m)
        jj = rng.integers(0, 2000, size=m)
        cases += run_case(
            f"mean_indexed_distance   pairs={m}",
            lambda x=x, ii=ii, jj=jj: (x, ii, jj),
            "mean_indexed_distance",
            args.repeats,
        )
    for n in (10_000, 100_000):
        x = np.ascontiguousarray(rng.normal(size=(n, 16)))
        center = np.ascontiguousarray(rng.normal(size=16))
        cases += run_case(
            f"point_distances         n={n}",
            lambda x=x, c=center: (x, c),
            "point_distances",
            args.repeats,
        )

    print(f"active backend: {BACKEND}")
    print(f"{'case':<44} {'python (ms)':>12} {'compiled (ms)':>14} {'speedup':>8}")
    for name, t_py, t_c, speedup in cases:
        if t_c is None:
            print(f"{name:<44} {t_py * 1e3:>12.3f} {'n/a':>14} {'n/a':>8}")
        else:
            print(
                f"{name:<44} {t_py * 1e3:>12.3f} {t_c * 1e3:>14.3f} "
                f"{speedup:>7.2f}x"
            )


if __name__ == "__main__":
    main()
