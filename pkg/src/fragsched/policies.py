"""Allocation policies: the MILP solvers, an equal-share baseline and FCFS admission."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence, TypeVar

from .milp import (
    AllocationDecision,
    SolveConfig,
    SolveStatus,
    build_milp,
    make_decision,
    solve_bb,
    solve_count_dp,
)
from .model import ClusterState

T = TypeVar("T")


class Policy(enum.Enum):
    MILP = "milp"
    EQUAL_SHARE = "equal-share"


SOLVERS = ("bb", "count-dp")


@dataclass(frozen=True)
class PolicyConfig:
    pj_max: int = 10
    policy: Policy = Policy.MILP
    solve: SolveConfig = field(default_factory=SolveConfig)
    # which exact solver backs the MILP policy
    solver: str = "count-dp"

    def __post_init__(self):
        if self.pj_max < 1:
            raise ValueError("pj_max must be at least 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")


def equal_share_counts(state: ClusterState) -> list[int]:
    """Equal split with FCFS remainders, clamped into each job's size range.

    Jobs whose share exceeds n_max are pinned at n_max and the rest is
    re-split.  If some share falls below n_min, the latest-arrived such job
    is dropped to zero and the split is redone, until nothing changes.
    """
    jobs = state.jobs
    counts = [0] * len(jobs)
    active = list(range(len(jobs)))
    pinned = 0
    while active:
        left = state.n_nodes - pinned
        base, extra = divmod(left, len(active))
        share = {j: base + (1 if i < extra else 0) for i, j in enumerate(active)}
        over = [j for j in active if share[j] > jobs[j].spec.n_max]
        if over:
            for j in over:
                counts[j] = jobs[j].spec.n_max
                pinned += counts[j]
            active = [j for j in active if j not in over]
            continue
        under = [j for j in active if share[j] < jobs[j].spec.n_min]
        if under:
            active.remove(under[-1])
            continue
        for j in active:
            counts[j] = share[j]
        break
    return counts


def equal_share(state: ClusterState, cfg: PolicyConfig) -> AllocationDecision:
    counts = equal_share_counts(state)
    return make_decision(state, counts, cfg.solve, SolveStatus.HEURISTIC,
                         stats={"solver": "equal-share"})


def admit_fcfs(queue: Sequence[T], running: int, pj_max: int) -> list[T]:
    """The prefix of the arrival-ordered queue that fits under ``pj_max``."""
    room = max(0, pj_max - running)
    return list(queue[:room])


def decide(state: ClusterState, cfg: PolicyConfig) -> AllocationDecision:
    if cfg.policy is Policy.EQUAL_SHARE:
        return equal_share(state, cfg)
    if cfg.solver == "bb":
        return solve_bb(build_milp(state, cfg.solve), cfg.solve.timeout_ms)
    return solve_count_dp(state, cfg.solve)


__all__ = ["Policy", "PolicyConfig", "SOLVERS", "equal_share", "equal_share_counts",
           "admit_fcfs", "decide"]
