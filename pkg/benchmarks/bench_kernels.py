"""Compare the numba kernels against their pure-numpy twins.

Usage: python benchmarks/bench_kernels.py [--nv 24] [--repeat 5]

Each kernel is run once to trigger compilation, then timed ``repeat`` times per
backend; the best time is reported together with the max abs difference between
the two results.
"""
import argparse
import time

import numpy as np

from landau_lab import _accel
from landau_lab.operators import sigma_mu
from landau_lab.phase_space import PhaseGrid


def best_of(fn, repeat):
    fn()  # warm up / compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(nv, rng):
    grid = PhaseGrid(16, nv)
    f = rng.standard_normal(grid.shape)
    S = sigma_mu(grid)
    D = np.moveaxis(S.full(), (0, 1), (-2, -1)).reshape(-1, 3, 3)
    n = 200_000
    t2, x2, v2 = rng.uniform(0, 4, n), rng.uniform(0, 4, n), rng.uniform(0, 4, n)
    cells = rng.uniform(-3, 3, nv ** 3)
    flat = f.reshape(grid.nx, -1)
    return {
        "diff_axis": lambda b: _accel.diff_axis(f, grid.dv, -1, backend=b),
        "diff_axis_adjoint": lambda b: _accel.diff_axis_adjoint(f, grid.dv, -2, backend=b),
        "selling_decompose": lambda b: _accel.selling_decompose(D, backend=b)[0],
        "periodic_shift": lambda b: _accel.periodic_shift(flat, cells, backend=b),
        "kinetic_gauge": lambda b: _accel.kinetic_gauge(t2, x2, v2, backend=b),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nv", type=int, default=24)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':20s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases(args.nv, rng).items():
        t_np, r_np = best_of(lambda: fn("numpy"), args.repeat)
        t_nb, r_nb = best_of(lambda: fn("numba"), args.repeat)
        diff = float(np.max(np.abs(np.asarray(r_np) - np.asarray(r_nb))))
        print(f"{name:20s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
