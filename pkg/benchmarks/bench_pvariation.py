"""Timing comparison of the compiled vs pure-Python p-variation kernels.

Run as: python benchmarks/bench_pvariation.py [--sizes 256,512,1024,2048]

Both backends implement the identical O(N^2) dynamic program; this script
times them on the same Wiener samples and asserts their outputs agree to
machine precision.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from roughassim import TimeGrid, sample_wiener
from roughassim._pvar_py import pvar_max_sum as pure_kernel

try:
    from roughassim._pvar_cy import pvar_max_sum as compiled_kernel
except ImportError:
    compiled_kernel = None


def time_kernel(kernel, values, p, repeats=3):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = kernel(values, p)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="256,512,1024,2048")
    parser.add_argument("--p", type=float, default=2.5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if compiled_kernel is None:
        print("compiled kernel unavailable; timing the pure-Python backend only")
    header = f"{'n_nodes':>8} {'pure (s)':>12} {'compiled (s)':>14} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        path = sample_wiener(TimeGrid(1.0, n - 1), 1, seed=0)
        values = np.ascontiguousarray(path.values)
        t_py, v_py = time_kernel(pure_kernel, values, args.p)
        if compiled_kernel is None:
            print(f"{n:>8} {t_py:>12.6f} {'-':>14} {'-':>9}")
            continue
        t_cy, v_cy = time_kernel(compiled_kernel, values, args.p)
        assert abs(v_py - v_cy) <= 1e-10 * max(1.0, abs(v_py)), "backend mismatch"
        print(f"{n:>8} {t_py:>12.6f} {t_cy:>14.6f} {t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
