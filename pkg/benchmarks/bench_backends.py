"""Steps per second of the numba and numpy trajectory kernels.

    python3 benchmarks/bench_backends.py [--runs 100] [--steps 5000]

Both backends run the same ensemble; the script also checks that their
propagators agree bit for bit.
"""

import argparse
import math
import time

import numpy as np

from weakprobe.experiments import initial_state, make_setup
from weakprobe.trajectory import run_ensemble


def timed(backend, setup, init, runs, steps):
    run_ensemble(init, 10, setup.bins, setup.qp, 0, n_runs=2, backend=backend)  # compile / warm up
    t0 = time.perf_counter()
    ens = run_ensemble(init, steps, setup.bins, setup.qp, 1, n_runs=runs, workers=1, backend=backend)
    return time.perf_counter() - t0, ens


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--steps", type=int, default=5000)
    parser.add_argument("--g", type=float, default=5.0)
    args = parser.parse_args()

    setup = make_setup(args.g, math.pi / 4)
    init = initial_state("L", setup.qp)
    total = args.runs * args.steps
    results = {}
    for backend in ("numba", "numpy"):
        elapsed, ens = timed(backend, setup, init, args.runs, args.steps)
        results[backend] = ens
        print(f"{backend:>6}: {total / elapsed:12.3e} steps/s  ({1e9 * elapsed / total:8.1f} ns/step)")
    same = np.array_equal(results["numba"].acc, results["numpy"].acc)
    print(f"propagators identical across backends: {same}")


if __name__ == "__main__":
    main()
