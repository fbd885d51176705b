"""Compare the compiled and numpy coherent-state projection kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--grid 81] [--dim 400] [--repeat 5]

The workload mirrors a Q-function evaluation: every label on a square grid
is projected onto one number-basis state. Both backends are timed on the
same inputs and their results compared.
"""
import argparse
import time

import numpy as np

from apasqueeze import fock, kernels


def workload(grid: int, dim: int):
    axis = np.linspace(-4.0, 4.0, grid)
    gammas = (axis[:, None] + 1j * axis[None, :]).ravel()
    occupation = dim / 4.0
    beta = np.sqrt(occupation) * np.exp(0.4j)
    state = fock.squeezed_coherent(fock.FockSpace(dim), beta, 0.3, leak_tol=None)
    return gammas, state.amplitudes


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--grid", type=int, default=81, help="labels per axis")
    parser.add_argument("--dim", type=int, default=400, help="number-basis dimension")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    gammas, amps = workload(args.grid, args.dim)
    backends = kernels.available_backends()
    results, timings = {}, {}
    for name in backends:
        results[name] = kernels.coherent_overlaps(gammas, amps, name)
        timings[name] = best_of(lambda: kernels.coherent_overlaps(gammas, amps, name), args.repeat)

    print(f"labels={gammas.size} dim={amps.size} repeat={args.repeat} default={kernels.BACKEND}")
    for name, seconds in timings.items():
        print(f"{name:>8}: {seconds * 1e3:9.2f} ms")
    if "cython" in timings:
        diff = np.max(np.abs(results["cython"] - results["python"]))
        print(f"speedup: {timings['python'] / timings['cython']:.1f}x  max |difference| = {diff:.2e}")
    else:
        print("compiled backend not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
