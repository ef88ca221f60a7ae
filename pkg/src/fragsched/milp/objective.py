"""Rescale costs, per-job decision gain and the allocation decision type."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..model import ClusterState, NodeId, ObjectiveMetric, TrainerSpec
from ..scalability import (
    CurveRangeError,
    ScalabilityCurve,
    evaluate,
    extended_rate,
    normalize_speedup,
)


class Direction(enum.Enum):
    UNCHANGED = "unchanged"
    UP = "up"
    DOWN = "down"


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    TIMEOUT_FEASIBLE = "TimeoutFeasible"
    TIMEOUT_KEPT_CURRENT = "TimeoutKeptCurrent"
    # non-optimizing policies (equal share)
    HEURISTIC = "Heuristic"


class InfeasibleCountsError(ValueError):
    """A count vector cannot be realized on the current pool."""


@dataclass(frozen=True)
class SolveConfig:
    t_fwd_s: float = 120.0
    metric: ObjectiveMetric = ObjectiveMetric.THROUGHPUT
    timeout_ms: int | None = None
    big_m: int | None = None

    def __post_init__(self):
        if not self.t_fwd_s > 0:
            raise ValueError("t_fwd_s must be positive")
        if self.timeout_ms is not None and self.timeout_ms < 0:
            raise ValueError("timeout_ms must be non-negative")

    def resolve_big_m(self, n_nodes: int) -> int:
        m = n_nodes + 1 if self.big_m is None else int(self.big_m)
        if m <= n_nodes:
            raise ValueError(f"big_m={m} must exceed the pool size {n_nodes}")
        return m


@dataclass
class AllocationDecision:
    assignment: dict[str, frozenset[NodeId]]
    counts: dict[str, int]
    direction: dict[str, Direction]
    objective_value: float | None
    status: SolveStatus
    stats: dict = field(default_factory=dict)


def metric_curve(curve: ScalabilityCurve, metric: ObjectiveMetric) -> ScalabilityCurve:
    if metric is ObjectiveMetric.SCALING_EFFICIENCY:
        return normalize_speedup(curve)
    return curve


def rescaling_cost(spec: TrainerSpec, c: int, n: int) -> float:
    if n < c:
        return spec.r_dw_s
    if n > c:
        return spec.r_up_s
    return 0.0


def current_value(curve: ScalabilityCurve, c: int) -> float:
    """Metric rate of the current allocation (defined below ``grid[0]`` too)."""
    return extended_rate(curve, c)


def decision_gain(spec: TrainerSpec, curve: ScalabilityCurve, c: int, n: int,
                  cfg: SolveConfig) -> float:
    """Forward-looking gain of moving a job from ``c`` to ``n`` nodes.

    ``curve`` is the raw throughput curve; the objective metric in
    ``cfg`` decides whether it is normalized first.
    """
    if not spec.admissible(n):
        raise CurveRangeError(f"{spec.name}: n={n} not in {{0}} or [{spec.n_min}, {spec.n_max}]")
    f = metric_curve(curve, cfg.metric)
    gain = cfg.t_fwd_s * evaluate(f, n)
    cost = rescaling_cost(spec, c, n)
    if cost:
        gain -= current_value(f, c) * cost
    return gain


def job_choices(spec: TrainerSpec, n_nodes: int) -> list[int]:
    """Admissible counts for one job, ascending, capped at the pool size."""
    return [0] + list(range(spec.n_min, min(spec.n_max, n_nodes) + 1))


def gain_table(state: ClusterState, cfg: SolveConfig):
    """Padded per-job tables of (gain, size, changed flag) over the choices."""
    choices = [job_choices(j.spec, state.n_nodes) for j in state.jobs]
    J = len(choices)
    K = max((len(c) for c in choices), default=1)
    gains = np.full((J, K), -np.inf)
    sizes = np.zeros((J, K), np.int64)
    changed = np.zeros((J, K), np.int64)
    nchoice = np.array([len(c) for c in choices], np.int64)
    for j, (slot, opts) in enumerate(zip(state.jobs, choices)):
        for k, n in enumerate(opts):
            gains[j, k] = decision_gain(slot.spec, slot.spec.curve, slot.count, n, cfg)
            sizes[j, k] = n
            changed[j, k] = int(n != slot.count)
    return choices, gains, sizes, changed, nchoice


def total_gain(state: ClusterState, counts, cfg: SolveConfig) -> float:
    """Objective of a count vector, summed right to left like the kernels."""
    s = 0.0
    for slot, n in reversed(list(zip(state.jobs, counts))):
        s = decision_gain(slot.spec, slot.spec.curve, slot.count, n, cfg) + s
    return s


def stay_objective(state: ClusterState, cfg: SolveConfig) -> float | None:
    """Objective of keeping the current map, or None if it is not admissible."""
    if any(not j.spec.admissible(j.count) for j in state.jobs):
        return None
    return total_gain(state, state.counts, cfg)


def realize_counts(state: ClusterState, counts) -> dict[str, frozenset[NodeId]]:
    """Assign node identities to a count vector without migrating any job.

    Downscaled jobs keep their lowest-sorted node ids; upscaled jobs keep
    everything and draw free nodes (idle plus just released) in ascending
    id order, earliest-arrived job first.
    """
    counts = list(counts)
    if len(counts) != len(state.jobs):
        raise InfeasibleCountsError("one count per job required")
    if sum(counts) > state.n_nodes:
        raise InfeasibleCountsError(f"counts sum {sum(counts)} exceeds pool of {state.n_nodes}")
    held: dict[str, list[NodeId]] = {}
    pool = set(state.free_nodes())
    for slot, n in zip(state.jobs, counts):
        if n < 0:
            raise InfeasibleCountsError("negative count")
        mine = sorted(slot.nodes)
        if n < len(mine):
            pool.update(mine[n:])
            mine = mine[:n]
        held[slot.spec.name] = mine
    free = sorted(pool)
    pos = 0
    for slot, n in zip(state.jobs, counts):
        mine = held[slot.spec.name]
        need = n - len(mine)
        if need > 0:
            if pos + need > len(free):
                raise InfeasibleCountsError("not enough free nodes")
            mine = mine + free[pos:pos + need]
            pos += need
        held[slot.spec.name] = mine
    return {name: frozenset(nodes) for name, nodes in held.items()}


def make_decision(state: ClusterState, counts, cfg: SolveConfig, status: SolveStatus,
                  objective: float | None = None, stats: dict | None = None,
                  assignment: dict | None = None) -> AllocationDecision:
    counts = [int(n) for n in counts]
    if assignment is None:
        assignment = realize_counts(state, counts)
    direction = {}
    for slot, n in zip(state.jobs, counts):
        c = slot.count
        direction[slot.spec.name] = (
            Direction.UP if n > c else Direction.DOWN if n < c else Direction.UNCHANGED
        )
    if objective is None and status is not SolveStatus.TIMEOUT_KEPT_CURRENT:
        objective = total_gain(state, counts, cfg)
    return AllocationDecision(
        assignment=assignment,
        counts={s.spec.name: n for s, n in zip(state.jobs, counts)},
        direction=direction,
        objective_value=objective,
        status=status,
        stats=dict(stats or {}),
    )


def keep_current(state: ClusterState, cfg: SolveConfig, stats=None) -> AllocationDecision:
    return make_decision(
        state, state.counts, cfg, SolveStatus.TIMEOUT_KEPT_CURRENT,
        objective=stay_objective(state, cfg), stats=stats,
        assignment={j.spec.name: j.nodes for j in state.jobs},
    )
