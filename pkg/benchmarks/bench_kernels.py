"""Compiled core vs numpy fallback on the two hot kernels.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from corrwitness import _pykernels, tomography as tomo
from corrwitness.photon import PixelGrid, random_odd_phase
from corrwitness.qstate import random_density_matrix

try:
    from corrwitness import _kernels as compiled
except ImportError:
    compiled = None


def sweep_case(rng):
    grid = PixelGrid()
    w = rng.random(grid.size)
    w /= w.sum()
    phase = np.ascontiguousarray(random_odd_phase(grid, rng).values)
    slopes = np.linspace(0.0, 1.0, 101)
    return lambda impl: impl.coherence_sweep(w, grid.offsets, slopes, phase)


def loglik_case(rng):
    recs = tomo.simulate_records(random_density_matrix(4, rng), tomo.projector_set(), 10_000, 0)
    kets, counts, totals, logref = tomo._arrays(recs)
    x = rng.standard_normal(16)
    return lambda impl: impl.loglik_grad(x, kets, counts, totals, logref, tomo.PROBABILITY_FLOOR)


def reconstruction_case(rng):
    recs = tomo.simulate_records(random_density_matrix(4, rng), tomo.projector_set(), 10_000, 0)

    def run(impl):
        saved = tomo.kernels.loglik_grad
        tomo.kernels.loglik_grad = impl.loglik_grad
        try:
            tomo.ml_reconstruct(recs)
        finally:
            tomo.kernels.loglik_grad = saved
    return run


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    cases = [("coherence_sweep (33 px x 101 slopes)", sweep_case(rng), 2000),
             ("loglik_grad (36 projectors)", loglik_case(rng), 5000),
             ("ml_reconstruct (36 x 1e4 counts)", reconstruction_case(rng), 5)]
    print(f"{'kernel':40s} {'python us':>12s} {'cython us':>12s} {'speedup':>8s}")
    for name, fn, number in cases:
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=number, repeat=args.repeat)) / number
        if compiled is None:
            print(f"{name:40s} {t_py * 1e6:12.1f} {'n/a':>12s} {'n/a':>8s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(compiled), number=number, repeat=args.repeat)) / number
        print(f"{name:40s} {t_py * 1e6:12.1f} {t_c * 1e6:12.1f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
