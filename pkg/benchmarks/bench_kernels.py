"""Time the numba and pure-numpy flavours of each hot kernel and check they agree.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

The numba column is first run once untimed so compilation is excluded.
Set CHVLAB_DISABLE_JIT=1 to see the numba column fall back to plain Python.
"""
import argparse
import time

import numpy as np

from chvlab import _kernels
from chvlab._jit import HAVE_NUMBA, USE_NUMBA
from chvlab.core import sample_gaussian_matrix
from chvlab.online import build_schedule


def best_time(fn, args, repeat):
    out = None
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(quick):
    n_cool = 5000 if quick else 20000
    a = sample_gaussian_matrix(50, n_cool, seed=1)
    temps = build_schedule(n_cool, 50, 16).temperatures()
    yield "cool_run", (_kernels.cool_run_numba, _kernels.cool_run_numpy), (a, temps)

    n_grid = 10 if quick else 13
    a = sample_gaussian_matrix(2, n_grid, seed=2)
    yield "enumerate_grid", (_kernels.enumerate_grid_numba, _kernels.enumerate_grid_numpy), (a, 1, 0.01 * 2)

    d = 4 if quick else 5
    center = np.random.default_rng(3).uniform(-1, 1, d)
    yield "count_ball_points", (_kernels.count_ball_points_numba, _kernels.count_ball_points_numpy), (center, 36.0)


def agree(x, y):
    if isinstance(x, tuple):
        return all(agree(p, q) for p, q in zip(x, y))
    return np.allclose(x, y, rtol=1e-12, atol=1e-12)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args()

    print(f"numba available: {HAVE_NUMBA}, jit enabled: {USE_NUMBA}")
    print(f"{'kernel':<20}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  agree")
    for name, (fast, slow), fargs in cases(args.quick):
        fast(*fargs)  # compile
        tf, of = best_time(fast, fargs, args.repeat)
        ts, os_ = best_time(slow, fargs, args.repeat)
        print(f"{name:<20}{tf:>10.4f}{ts:>10.4f}{ts / tf:>9.1f}  {agree(of, os_)}")


if __name__ == "__main__":
    main()
