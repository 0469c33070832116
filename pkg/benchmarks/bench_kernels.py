"""Compare the numba-compiled convolution loop with the numpy fallback.

Two measurements:
  * one convolution layer at several grid sizes, calling both kernels directly;
  * a full heterogeneous solve, run in a subprocess per backend so that the
    BULKPLAN_DISABLE_JIT switch is honoured at import time.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from bulkplan import _kernels

SOLVE_SNIPPET = """
import json, statistics, time
from bulkplan.scenarios import gen_heterogeneous
from bulkplan.solver import solve
s = gen_heterogeneous(1, seed=0)
solve(s, "n_asc")
times = []
for _ in range({repeats}):
    t0 = time.perf_counter()
    solve(s, "n_asc")
    times.append(time.perf_counter() - t0)
print(json.dumps({{"median_ms": 1000 * statistics.median(times)}}))
"""


def layer_args(z, rng):
    xs = np.arange(z + 1, dtype=float)
    prev_cost = rng.uniform(0, 5, size=xs.size)
    prev_act = rng.integers(0, 3, size=xs.size).astype(np.int64)
    cs = np.arange(z + 1, dtype=float)
    return xs, prev_cost, prev_act, cs, 0.8 * z, 1.0, 0.01, True, 1e-9, 1e-9


def bench_layers(repeats):
    rng = np.random.default_rng(0)
    rows = []
    for z in (50, 150, 400):
        args = layer_args(z, rng)
        _kernels.convolve_linear_numba(*args)  # compile
        t_nb = min(timeit.repeat(lambda: _kernels.convolve_linear_numba(*args), number=1, repeat=repeats))
        t_np = min(timeit.repeat(lambda: _kernels.convolve_linear_numpy(*args), number=1, repeat=repeats))
        rows.append((z, t_nb * 1e3, t_np * 1e3))
    return rows


def bench_solve(disable_jit, repeats):
    env = dict(os.environ, BULKPLAN_DISABLE_JIT="1" if disable_jit else "0")
    out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET.format(repeats=repeats)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)["median_ms"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")

    print("single layer (best of %d), ms" % args.repeats)
    print(f"{'Z':>6} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for z, nb, npy in bench_layers(args.repeats):
        print(f"{z:>6} {nb:>10.3f} {npy:>10.3f} {npy / nb:>7.1f}x")

    nb = bench_solve(False, args.repeats)
    npy = bench_solve(True, args.repeats)
    print("\nfull heterogeneous solve (K=4, N=20, 40 requests), median ms")
    print(f"  numba {nb:.2f}   numpy {npy:.2f}   speedup {npy / nb:.1f}x")


if __name__ == "__main__":
    main()
