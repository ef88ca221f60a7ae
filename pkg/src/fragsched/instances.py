"""Seeded random allocation instances for cross-solver verification."""
from __future__ import annotations

import numpy as np

from .milp.count_dp import EXHAUSTIVE_LIMIT, search_space_size
from .milp.objective import SolveConfig
from .model import ClusterState, JobSlot, ObjectiveMetric, TrainerSpec
from .scalability import ScalabilityCurve


def random_curve(rng: np.random.Generator, max_nodes: int, d_range=(2, 5)) -> ScalabilityCurve:
    """Random increasing-grid curve with D points spanning [1, max_nodes]."""
    max_nodes = max(max_nodes, 2)
    d = int(rng.integers(d_range[0], d_range[1] + 1))
    d = min(d, max_nodes)
    inner = rng.choice(np.arange(2, max_nodes), size=max(0, d - 2), replace=False) if d > 2 else []
    grid = sorted({1, max_nodes, *(int(g) for g in inner)})
    rates = np.round(rng.uniform(0.0, 100.0, size=len(grid)), 3)
    rates[0] = max(rates[0], 0.5)
    return ScalabilityCurve(tuple(grid), tuple(float(r) for r in rates))


def random_instance(rng: np.random.Generator, max_jobs: int = 4, max_nodes: int = 12,
                    d_range=(2, 5), limit: int | None = EXHAUSTIVE_LIMIT):
    """A valid random (state, cfg) pair; resampled until the exhaustive guard holds."""
    while True:
        n_nodes = int(rng.integers(1, max_nodes + 1))
        n_jobs = int(rng.integers(1, max_jobs + 1))
        nodes = [f"n{i:02d}" for i in range(n_nodes)]
        free = list(nodes)
        rng.shuffle(free)
        slots = []
        for j in range(n_jobs):
            top = int(rng.integers(2, max(3, n_nodes + 3)))
            curve = random_curve(rng, top, d_range)
            n_min = int(rng.integers(1, curve.max_nodes + 1))
            n_max = int(rng.integers(n_min, curve.max_nodes + 1))
            spec = TrainerSpec(
                name=f"job{j}", n_min=n_min, n_max=n_max,
                r_up_s=float(np.round(rng.uniform(0, 30), 3)),
                r_dw_s=float(np.round(rng.uniform(0, 15), 3)),
                total_samples=1e6, curve=curve,
            )
            # current count: 0 or admissible, drawn from what is still free
            options = [0] + [n for n in range(n_min, n_max + 1) if n <= len(free)]
            c = int(rng.choice(options))
            held = frozenset(free[:c])
            free = free[c:]
            slots.append(JobSlot(spec, held))
        state = ClusterState(frozenset(nodes), tuple(slots))
        if limit is not None and search_space_size(state) > limit:
            continue
        metric = ObjectiveMetric.THROUGHPUT if rng.random() < 0.5 else ObjectiveMetric.SCALING_EFFICIENCY
        cfg = SolveConfig(t_fwd_s=float(rng.choice([10.0, 60.0, 120.0, 300.0])), metric=metric)
        return state, cfg
