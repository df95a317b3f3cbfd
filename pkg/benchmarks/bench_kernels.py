"""Compare the compiled and pure-Python tridiagonal backends.

    python3 benchmarks/bench_kernels.py [--sizes 128 512 2048] [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from kvlab import kernels
from kvlab.grid import Grid
from kvlab.material import builtin_family
from kvlab.solver import InitialData, Params, init_state, step


def _system(n, rng):
    lower = -rng.uniform(0.1, 1.0, n)
    upper = -rng.uniform(0.1, 1.0, n)
    diag = 2.5 + rng.uniform(0.0, 1.0, n)
    return lower, diag, upper, rng.standard_normal(n)


def bench(sizes, repeat):
    rng = np.random.default_rng(0)
    m = builtin_family("affine_tanh", gamma0=1.0, delta=0.2)
    p = Params(1.0, 1.0)
    rows = []
    for n in sizes:
        system = _system(n, rng)
        grid = Grid(1.0, n)
        x = grid.x
        th = np.sin(np.pi * x)
        th[0] = th[-1] = 0.0
        state = init_state(InitialData(0.2 * np.cos(np.pi * x), np.zeros(n), th), p)
        dt = 0.25 * grid.dx
        for backend in kernels.available_backends():
            kernels.use_backend(backend)
            number = max(1, 20000 // n)
            t_solve = min(timeit.repeat(lambda: kernels.thomas(*system), number=number, repeat=repeat)) / number
            t_step = min(timeit.repeat(lambda: step(state, dt, m, p, grid), number=number, repeat=repeat)) / number
            rows.append((n, backend, t_solve, t_step))
    kernels.use_backend(kernels.available_backends()[0])
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[128, 512, 2048])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rows = bench(args.sizes, args.repeat)
    print(f"{'n':>6} {'backend':>9} {'thomas [us]':>12} {'step [us]':>11}")
    for n, backend, ts, tp in rows:
        print(f"{n:6d} {backend:>9} {ts * 1e6:12.1f} {tp * 1e6:11.1f}")
    by = {(n, b): (ts, tp) for n, b, ts, tp in rows}
    for n in args.sizes:
        if (n, "compiled") in by:
            (cs, cp), (ps, pp) = by[(n, "compiled")], by[(n, "python")]
            print(f"n={n}: thomas speedup {ps / cs:.1f}x, step speedup {pp / cp:.1f}x")


if __name__ == "__main__":
    main()
