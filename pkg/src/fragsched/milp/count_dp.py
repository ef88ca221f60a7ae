"""Exact solvers over job count vectors.

Once migration is forbidden, node identities are interchangeable and the
objective separates per job, so the allocation reduces to a budgeted
choice of one count per job.
"""
from __future__ import annotations

import time

from .. import kernels
from ..model import ClusterState
from .objective import (
    AllocationDecision,
    SolveConfig,
    SolveStatus,
    gain_table,
    keep_current,
    make_decision,
)

EXHAUSTIVE_LIMIT = 10_000_000


class SearchSpaceTooLarge(ValueError):
    """Exhaustive enumeration refused: the product of choice-set sizes is too big."""


def _trivial(state: ClusterState, cfg: SolveConfig) -> AllocationDecision:
    return make_decision(state, [], cfg, SolveStatus.OPTIMAL, objective=0.0)


def solve_count_dp(state: ClusterState, cfg: SolveConfig, *, kernel=None) -> AllocationDecision:
    kernel = kernel or kernels.backend
    if cfg.timeout_ms == 0:
        return keep_current(state, cfg, stats={"solver": "count-dp"})
    if not state.jobs:
        return _trivial(state, cfg)
    t0 = time.perf_counter()
    choices, gains, sizes, changed, nchoice = gain_table(state, cfg)
    budget = state.n_nodes
    V, C = kernel.budget_dp(gains, sizes, changed, nchoice, budget)

    # forward reconstruction: prefer larger counts for earlier jobs
    picked = []
    b = budget
    for j, opts in enumerate(choices):
        for k in range(len(opts) - 1, -1, -1):
            s = int(sizes[j, k])
            if s > b:
                continue
            if (gains[j, k] + V[j + 1, b - s] == V[j, b]
                    and changed[j, k] + C[j + 1, b - s] == C[j, b]):
                picked.append(opts[k])
                b -= s
                break
        else:  # pragma: no cover - the DP table always admits a path
            raise RuntimeError("DP reconstruction failed")
    stats = {"solver": "count-dp", "solve_s": time.perf_counter() - t0}
    return make_decision(state, picked, cfg, SolveStatus.OPTIMAL,
                         objective=float(V[0, budget]), stats=stats)


def search_space_size(state: ClusterState) -> int:
    size = 1
    for slot in state.jobs:
        size *= 1 + max(0, min(slot.spec.n_max, state.n_nodes) - slot.spec.n_min + 1)
    return size


def solve_exhaustive(state: ClusterState, cfg: SolveConfig, *, kernel=None,
                     limit: int = EXHAUSTIVE_LIMIT) -> AllocationDecision:
    kernel = kernel or kernels.backend
    size = search_space_size(state)
    if size > limit:
        raise SearchSpaceTooLarge(f"{size} count vectors exceed the limit of {limit}")
    if not state.jobs:
        dec = _trivial(state, cfg)
        dec.stats.update(solver="exhaustive", candidates=1)
        return dec
    choices, gains, sizes, changed, nchoice = gain_table(state, cfg)
    best, obj, total = kernel.exhaustive_best(gains, sizes, changed, nchoice, state.n_nodes)
    counts = [choices[j][int(k)] for j, k in enumerate(best)]
    return make_decision(state, counts, cfg, SolveStatus.OPTIMAL, objective=float(obj),
                         stats={"solver": "exhaustive", "candidates": int(total)})


__all__ = ["solve_count_dp", "solve_exhaustive", "search_space_size",
           "SearchSpaceTooLarge", "EXHAUSTIVE_LIMIT"]
