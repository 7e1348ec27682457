"""Benchmark the compiled assignment kernel against the numpy fallback.

Both backends implement the same shortest-augmenting-path algorithm and
return identical matchings; this script measures the speed gap that makes
the compiled kernel the default at import.

Usage: python benchmarks/bench_assignment.py [--sizes 64,128,256,512,1024]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from smoothmatch import _solver_py

try:
    from smoothmatch import _solver_cy
except ImportError:
    _solver_cy = None


def _time(impl, C, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = impl.solve_dense(C)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="64,128,256,512,1024")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(args.seed)

    if _solver_cy is None:
        print("compiled kernel not built; timing the numpy fallback only")
    header = f"{'n':>6} {'numpy (s)':>12} {'cython (s)':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        S = rng.random(n)
        R = rng.random(n)
        C = np.abs(S[:, None] - R[None, :])
        t_py, res_py = _time(_solver_py, C, args.repeats)
        if _solver_cy is not None:
            t_cy, res_cy = _time(_solver_cy, C, args.repeats)
            assert np.array_equal(res_py[0], res_cy[0]), "backends disagree"
            print(f"{n:>6} {t_py:>12.4f} {t_cy:>12.4f} {t_py / t_cy:>8.1f}x")
        else:
            print(f"{n:>6} {t_py:>12.4f} {'-':>12} {'-':>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
