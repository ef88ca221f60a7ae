"""LP-based branch-and-bound for the allocation MILP.

Best-bound node selection, branching on the most fractional binary, and
SOS2 set branching once all binaries are integral.  A rounding heuristic
on every node LP supplies incumbents.
"""
from __future__ import annotations

import heapq
import math
import time

import numpy as np

from .. import kernels
from .lp import OPTIMAL, INFEASIBLE, solve_lp
from .objective import (
    AllocationDecision,
    SolveStatus,
    keep_current,
    make_decision,
    stay_objective,
    total_gain,
)
from .problem import MilpProblem

_INT_TOL = 1e-6
_SOS_TOL = 1e-9


class SolverError(RuntimeError):
    """The LP relaxation failed inside branch-and-bound."""


def _round_counts(problem: MilpProblem, x: np.ndarray, nearest: bool) -> list[int]:
    counts = []
    for j, slot in enumerate(problem.state.jobs):
        level = float(x[problem.x[j]].sum())
        n = int(math.floor(level + 0.5)) if nearest else int(math.floor(level + 1e-9))
        n = min(n, slot.spec.n_max)
        if n < slot.spec.n_min:
            n = 0
        counts.append(n)
    return counts


def _sos2_violation(problem: MilpProblem, x: np.ndarray):
    for idx, grid in problem.sos2:
        v = x[idx]
        support = np.flatnonzero(v > _SOS_TOL)
        if support.size and support[-1] - support[0] >= 2:
            return idx, v, support
    return None


def _branch_variable(x: np.ndarray, *groups) -> int | None:
    """Most fractional binary, taking earlier groups first."""
    for idx in groups:
        if not idx.size:
            continue
        frac = np.abs(x[idx] - np.round(x[idx]))
        k = int(np.argmax(frac))
        if frac[k] > _INT_TOL:
            return int(idx[k])
    return None


def symmetry_rows(problem: MilpProblem):
    """Rows ordering interchangeable nodes by the job they serve.

    Nodes held by the same job (or by none) differ only in name, so any
    allocation can be permuted so that the owner code sum_j (j+1) x[j,n]
    is non-increasing along each class.  Adding these rows keeps the
    optimal value and removes the permutation copies from the search.
    """
    state = problem.state
    owner = {n: -1 for n in problem.nodes}
    for j, slot in enumerate(state.jobs):
        for n in slot.nodes:
            owner[n] = j
    pos = {n: i for i, n in enumerate(problem.nodes)}
    classes: dict[int, list[int]] = {}
    for n in problem.nodes:
        classes.setdefault(owner[n], []).append(pos[n])
    code = np.arange(1, len(state.jobs) + 1, dtype=float)
    rows = []
    for members in classes.values():
        for a, b in zip(members, members[1:]):
            row = np.zeros(problem.n_vars)
            row[problem.x[:, b]] = code
            row[problem.x[:, a]] -= code
            rows.append(row)
    if not rows:
        return np.zeros((0, problem.n_vars)), np.zeros(0)
    return np.array(rows), np.zeros(len(rows))


def solve_bb(problem: MilpProblem, timeout_ms: int | None = None, *, kernel=None) -> AllocationDecision:
    kernel = kernel or kernels.backend
    state, cfg = problem.state, problem.cfg
    if timeout_ms is None:
        timeout_ms = cfg.timeout_ms
    t0 = time.perf_counter()
    stats = {"solver": "bb", "nodes": 0, "lp_iterations": 0}
    if timeout_ms == 0:
        return keep_current(state, cfg, stats=stats)
    if not state.jobs:
        return make_decision(state, [], cfg, SolveStatus.OPTIMAL, objective=0.0, stats=stats)
    deadline = None if timeout_ms is None else t0 + timeout_ms / 1000.0
    budget = state.n_nodes

    stay = stay_objective(state, cfg)
    best = {"counts": None, "value": -math.inf}

    def cutoff() -> float:
        v = best["value"] if stay is None else max(best["value"], stay)
        return v + 1e-10 * max(1.0, abs(v)) if v > -math.inf else -math.inf

    def offer(counts):
        if sum(counts) > budget:
            return
        value = total_gain(state, counts, cfg)
        if value > best["value"]:
            best["counts"], best["value"] = list(counts), value

    S, s_rhs = symmetry_rows(problem)
    A_ub = np.vstack([problem.A_ub, S])
    b_ub = np.concatenate([problem.b_ub, s_rhs])

    def evaluate(lb, ub):
        res = solve_lp(problem.c, A_ub, b_ub, problem.A_eq, problem.b_eq,
                       lb, ub, kernel=kernel)
        stats["lp_iterations"] += res.iterations
        stats["nodes"] += 1
        if res.status == INFEASIBLE:
            return None
        if res.status != OPTIMAL:
            raise SolverError(f"LP relaxation {res.status}")
        offer(_round_counts(problem, res.x, nearest=False))
        offer(_round_counts(problem, res.x, nearest=True))
        return res

    heap = []
    seq = 0
    root = evaluate(problem.lb.copy(), problem.ub.copy())
    if root is not None:
        heapq.heappush(heap, (-root.objective, seq, problem.lb.copy(), problem.ub.copy(), root.x))
    timed_out = False
    job_level = np.concatenate([problem.yl, problem.yu, problem.z, problem.zu, problem.zd])
    node_level = np.concatenate([problem.x.ravel(), problem.u.ravel()])

    while heap:
        if deadline is not None and time.perf_counter() > deadline:
            timed_out = True
            break
        negb, _, lb, ub, x = heapq.heappop(heap)
        if -negb <= cutoff():
            # best-bound order: nothing left can beat the incumbent
            heap.clear()
            break
        var = _branch_variable(x, job_level, node_level)
        children = []
        if var is not None:
            lo_ub = ub.copy()
            lo_ub[var] = 0.0
            hi_lb = lb.copy()
            hi_lb[var] = 1.0
            children = [(lb, lo_ub), (hi_lb, ub)]
        else:
            viol = _sos2_violation(problem, x)
            if viol is None:
                offer([int(round(float(x[problem.x[j]].sum()))) for j in range(len(state.jobs))])
                continue
            idx, v, support = viol
            pos = np.arange(idx.size)
            split = int(round(float((pos * v).sum() / v.sum())))
            split = min(max(split, int(support[0]) + 1), int(support[-1]) - 1)
            left_ub = ub.copy()
            left_ub[idx[split + 1:]] = 0.0
            right_ub = ub.copy()
            right_ub[idx[:split]] = 0.0
            children = [(lb, left_ub), (lb, right_ub)]
        for clb, cub in children:
            res = evaluate(clb, cub)
            if res is not None and res.objective > cutoff():
                seq += 1
                heapq.heappush(heap, (-res.objective, seq, clb, cub, res.x))

    stats["solve_s"] = time.perf_counter() - t0
    found = best["counts"] is not None
    if timed_out and not found:
        return keep_current(state, cfg, stats=stats)
    status = SolveStatus.TIMEOUT_FEASIBLE if timed_out else SolveStatus.OPTIMAL
    # keeping the current map wins ties: it rescales nothing
    if stay is not None and (not found or stay >= best["value"]):
        return make_decision(state, state.counts, cfg, status, objective=stay, stats=stats,
                             assignment={j.spec.name: j.nodes for j in state.jobs})
    return make_decision(state, best["counts"], cfg, status, objective=best["value"], stats=stats)
