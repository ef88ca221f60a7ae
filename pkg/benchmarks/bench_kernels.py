"""Time the numba and numpy kernel backends on the same seeded instances.

    python benchmarks/bench_kernels.py [--instances 100] [--seed 7]

JIT compilation is excluded by a warm-up pass.  Objectives from the two
backends are compared so a speedup never hides a disagreement.
"""
import argparse
import sys
import time

import numpy as np

from fragsched import kernels
from fragsched.instances import random_instance
from fragsched.milp import build_milp, solve_bb, solve_count_dp, solve_exhaustive

SOLVERS = {
    "count-dp": lambda state, cfg, k: solve_count_dp(state, cfg, kernel=k),
    "exhaustive": lambda state, cfg, k: solve_exhaustive(state, cfg, kernel=k),
    "bb (simplex)": lambda state, cfg, k: solve_bb(build_milp(state, cfg), kernel=k),
}


def instances(n, seed, max_jobs, max_nodes):
    rng = np.random.default_rng(seed)
    return [random_instance(rng, max_jobs=max_jobs, max_nodes=max_nodes) for _ in range(n)]


def time_backend(kernel, cases, solve):
    solve(*cases[0], kernel)  # warm-up / JIT
    values = []
    t0 = time.perf_counter()
    for state, cfg in cases:
        values.append(solve(state, cfg, kernel).objective_value)
    return time.perf_counter() - t0, values


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--max-jobs", type=int, default=4)
    p.add_argument("--max-nodes", type=int, default=12)
    args = p.parse_args(argv)

    names = ["numpy"]
    try:
        kernels.get_backend("numba")
        names.append("numba")
    except ImportError:
        print("numba not importable; timing numpy only", file=sys.stderr)
    cases = instances(args.instances, args.seed, args.max_jobs, args.max_nodes)

    print(f"{args.instances} instances (J<={args.max_jobs}, N<={args.max_nodes}, seed {args.seed})")
    print(f"{'solver':<14}" + "".join(f"{n + ' s':>12}" for n in names) + f"{'speedup':>10}")
    status = 0
    for label, solve in SOLVERS.items():
        timings, results = [], []
        for name in names:
            seconds, values = time_backend(kernels.get_backend(name), cases, solve)
            timings.append(seconds)
            results.append(values)
        speed = f"{timings[0] / timings[1]:.1f}x" if len(timings) == 2 else "-"
        print(f"{label:<14}" + "".join(f"{t:>12.3f}" for t in timings) + f"{speed:>10}")
        if len(results) == 2 and not np.allclose(results[0], results[1], rtol=1e-9, atol=1e-9):
            print(f"  backends disagree on {label}", file=sys.stderr)
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
