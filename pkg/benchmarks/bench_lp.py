#!/usr/bin/env python3
"""Benchmark the compiled simplex pivot kernel against the pure fallback.

Runs identical two-phase simplex solves through both backends on random
LP instances (and on LP relaxations of allocation problems), reports
wall-clock timings, and verifies the two backends return bit-identical
solutions.

Usage: python benchmarks/bench_lp.py [--sizes 20x40,60x120] [--repeat 5]
"""

import argparse
import time

import numpy as np

from dormalloc import lp
from dormalloc import _simplex_py

try:
    from dormalloc import _simplex_core
except ImportError:
    _simplex_core = None


def random_instance(rng, m, n):
    # feasible by construction: b = A @ x0 with x0 >= 0
    A = rng.uniform(-1.0, 2.0, size=(m, n))
    x0 = rng.uniform(0.0, 1.0, size=n)
    b = A @ x0 + rng.uniform(0.0, 0.5, size=m)
    c = rng.uniform(0.0, 1.0, size=n)
    return c, A, b


def run_backend(kernel, instances, repeat):
    best = float("inf")
    results = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        results = [lp.solve_lp(c, A, b, kernel=kernel) for c, A, b in instances]
        best = min(best, time.perf_counter() - t0)
    return best, results


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="10x20,30x60,60x120,100x200",
                    help="comma-separated MxN constraint/variable sizes")
    ap.add_argument("--count", type=int, default=20,
                    help="instances per size")
    ap.add_argument("--repeat", type=int, default=3,
                    help="timing repetitions (best is reported)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if _simplex_core is None:
        print("compiled kernel not available; nothing to compare")
        return 1

    rng = np.random.default_rng(args.seed)
    print(f"{'size':>10} {'pure (s)':>10} {'cython (s)':>11} "
          f"{'speedup':>8}  identical")
    all_identical = True
    for size in args.sizes.split(","):
        m, n = (int(v) for v in size.split("x"))
        instances = [random_instance(rng, m, n) for _ in range(args.count)]

        t_py, res_py = run_backend(_simplex_py, instances, args.repeat)
        t_cy, res_cy = run_backend(_simplex_core, instances, args.repeat)

        identical = True
        for a, b in zip(res_py, res_cy):
            if a.status != b.status or a.pivots != b.pivots:
                identical = False
            elif a.x is not None and not np.array_equal(a.x, b.x):
                identical = False
        all_identical &= identical

        print(f"{size:>10} {t_py:>10.4f} {t_cy:>11.4f} "
              f"{t_py / t_cy:>7.2f}x  {identical}")

    if not all_identical:
        print("ERROR: backends disagree bit-for-bit")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
