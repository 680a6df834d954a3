"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--n 500] [--iterations 200] [--repeat 3]

Each backend runs the same short chain on simulated data; the script
reports the best wall time per backend, the speed-up, and whether the two
traces agree bit for bit.
"""

import argparse
import time

import numpy as np

from sggmix import _backend
from sggmix.distributions import rng_stream
from sggmix.sampler import ChainConfig, run_chain
from sggmix.simulate import sample_mixture, simulation_study_spec


def best_time(x, cfg, kernels, repeat):
    best, trace = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        trace = run_chain(x, cfg, kernels=kernels)
        best = min(best, time.perf_counter() - t0)
    return best, trace


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--iterations", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    x = sample_mixture(simulation_study_spec(), args.n, rng_stream(2024))[0]
    cfg = ChainConfig(iterations=args.iterations, burn_in=args.iterations // 2, thinning=1, seed=0)
    results = {}
    for name, kernels in sorted(_backend.BACKENDS.items()):
        results[name] = best_time(x, cfg, kernels, args.repeat)
        print(f"{name:>7}: {results[name][0]:8.3f} s  "
              f"({1e3 * results[name][0] / args.iterations:.2f} ms/iteration)")
    if "cython" not in results:
        print("compiled extension not built; only the fallback was timed")
        return
    py, cy = results["python"], results["cython"]
    same = all(np.array_equal(getattr(py[1], f), getattr(cy[1], f))
               for f in ("cluster_theta", "assignment", "latents", "nu"))
    print(f"speed-up: {py[0] / cy[0]:.1f}x, traces identical: {same}")


if __name__ == "__main__":
    main()
