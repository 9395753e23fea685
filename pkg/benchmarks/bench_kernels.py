"""Compiled vs pure-Python kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--steps 20000] [--dim 60]

Times the homography fold (one long chunk, no early stop) and the Jacobi
eigensolver on the same inputs for every available backend and prints the
best wall time of ``--repeat`` runs and the speed-up.
"""
import argparse
import time

import numpy as np

from dirac_green import _backend
from dirac_green.model import HalfLine, OperatorSpec, recursion_arrays
from dirac_green.potentials import Oscillating, PotentialPair, Power, Sequence


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def fold_case(steps):
    pot = PotentialPair(V1=Sequence(Oscillating(2.0, 1.0)), V2=Sequence(Power(1.0, 1.5)))
    spec = OperatorSpec(0.7, HalfLine(0), pot, nu1=2)
    a, b, c = recursion_arrays(spec, 1.4 + 1e-4j, np.arange(steps + 2))

    def run(kern):
        state = np.array([0, 1, -1, 0], dtype=complex)
        # tol = 0 disables the early stop so every step is folded
        kern.fold_chunk(a, b, c, steps, 2, 64, 0, True, 0.0, state, 0j, False)
    return run


def jacobi_case(dim, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    M = X + X.conj().T

    def run(kern):
        kern.jacobi_eigh(M.copy(), 1e-15, 100)
    return run


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--steps", type=int, default=20000, help="maps folded per run")
    p.add_argument("--dim", type=int, default=60, help="Jacobi matrix dimension")
    args = p.parse_args(argv)

    names = _backend.available()
    cases = {f"fold_chunk ({args.steps} maps)": fold_case(args.steps),
             f"jacobi_eigh ({args.dim}x{args.dim})": jacobi_case(args.dim)}
    print(f"{'kernel':<28}" + "".join(f"{n:>12}" for n in names) + f"{'speed-up':>12}")
    for label, run in cases.items():
        times = {n: best_of(lambda: run(_backend.get_backend(n)), args.repeat) for n in names}
        row = f"{label:<28}" + "".join(f"{times[n]:>11.4f}s" for n in names)
        if len(names) == 2:
            row += f"{times['python'] / times['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
