"""Time the compiled kernels against their numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py``. Compilation happens in a
warm-up call that is not timed.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from coordetect import _kernels as K
from coordetect import lp, revpref, sim


def cases(rng):
    alpha = rng.uniform(0.1, 1.1, (10, 2))
    eps = rng.normal(0.0, 0.05, (500, 3, 10, 2))
    yield "psi (L=500, M=3, T=10)", lambda f: f(alpha, eps), K.psi_jit, K.psi_np

    P = rng.uniform(0.2, 1.0, (2, 2))
    Q = np.array([1.5, 1.5])
    mu = np.array([0.5, 0.5])
    probe = rng.uniform(0.1, 1.1, 2)
    yield ("grid (M=2, N=2, step 0.01)", lambda f: f(probe, P, Q, mu, 100, 0, np.zeros(2), 0.0),
           K.grid_jit, K.grid_np)

    z0 = rng.uniform(0.0, 1.0, 4)
    a = np.tile(probe, 2)
    yield ("pga (M=2, N=2)", lambda f: f(z0, a, P, Q, mu, 1e-10, 1000, 1e8),
           K.pga_jit, K.pga_np)

    data = sim.generate_dataset(sim.example_config(), 0)
    prog = revpref.afriat_program(revpref.expenditure_gaps(data)[0])

    def run_lp(f):
        saved = K.simplex_loop
        K.simplex_loop = f
        try:
            lp.solve(prog)
        finally:
            K.simplex_loop = saved
    yield "simplex (Afriat LP, T=10)", run_lp, K.simplex_loop_jit, K.simplex_loop_np


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if K.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':30s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, call, fast, slow in cases(np.random.default_rng(0)):
        call(fast)
        times = []
        for f in (fast, slow):
            n = 3
            t = min(timeit.repeat(lambda: call(f), number=n, repeat=args.repeat)) / n
            times.append(t * 1e3)
        print(f"{name:30s} {times[0]:10.3f} {times[1]:10.3f} {times[1] / times[0]:7.1f}x")


if __name__ == "__main__":
    main()
