"""Evaluation arithmetic: resource integral, equivalent nodes, efficiency."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .milp.count_dp import solve_count_dp
from .milp.objective import SolveConfig
from .model import ClusterState, JobSlot, ObjectiveMetric, TrainerSpec
from .scalability import evaluate

if TYPE_CHECKING:
    from .simulator import SimulationReport
    from .trace import EventLog

log = logging.getLogger(__name__)

DEFAULT_WINDOW_S = 6 * 3600.0


class UndefinedEfficiencyError(ValueError):
    """Utilization efficiency needs a positive static outcome."""


def resource_integral(log_: "EventLog", t0_s: float, t1_s: float) -> float:
    """Node-hours of idle pool inside [t0_s, t1_s].

    The pool is a step function of the events, empty before the first one
    and constant after the last.
    """
    if not t1_s > t0_s:
        return 0.0
    total = 0.0
    times = log_.times + [math.inf]
    sizes = log_.pool_sizes()
    for k in range(len(log_.events)):
        a = max(times[k], t0_s)
        b = min(times[k + 1], t1_s)
        if b > a:
            total += float(sizes[k]) * (b - a)
    return total / 3600.0


def equivalent_nodes(log_: "EventLog", t0_s: float, t1_s: float) -> float:
    if not t1_s > t0_s:
        raise ValueError("equivalent nodes need a window of positive length")
    return resource_integral(log_, t0_s, t1_s) * 3600.0 / (t1_s - t0_s)


def static_allocation(trainers: Sequence[TrainerSpec], n_nodes: int) -> dict[str, int]:
    """Throughput-optimal one-shot split of ``n_nodes`` with free rescaling."""
    if not trainers:
        return {}
    free = [replace(t, r_up_s=0.0, r_dw_s=0.0) for t in trainers]
    state = ClusterState(
        frozenset(f"s{i}" for i in range(max(0, n_nodes))),
        tuple(JobSlot(t) for t in free),
    )
    cfg = SolveConfig(t_fwd_s=1.0, metric=ObjectiveMetric.THROUGHPUT)
    return solve_count_dp(state, cfg).counts


def static_baseline_outcome(trainers: Sequence[TrainerSpec], n_eq: float,
                            duration_s: float) -> float:
    """Samples the trainers would process on floor(n_eq) static nodes."""
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    n = int(math.floor(n_eq + 1e-9))
    counts = static_allocation(trainers, n)
    rate = 0.0
    for t in reversed(list(trainers)):
        rate = evaluate(t.curve, counts[t.name]) + rate
    if rate == 0.0:
        log.warning("static baseline has no admissible allocation on %d nodes", n)
    return rate * duration_s


def utilization_efficiency(a_e: float, a_s: float) -> float:
    if not a_s > 0:
        raise UndefinedEfficiencyError("static outcome is zero; efficiency undefined")
    return 100.0 * a_e / a_s


@dataclass
class EventLedger:
    t_s: list[float]
    investment_a: list[float]
    return_a: list[float]
    investment_b: list[float]
    return_b: list[float]
    speedup: list[float | None]
    skipped: int

    def mean_speedup(self) -> float | None:
        vals = [s for s in self.speedup if s is not None]
        return float(np.mean(vals)) if vals else None


def per_event_ledger(report_a: "SimulationReport", report_b: "SimulationReport") -> EventLedger:
    """Per-event rescale investment, outcome and speedup of run a over run b."""
    if report_a.log_fingerprint != report_b.log_fingerprint:
        raise ValueError("reports come from different event logs")
    speed = []
    skipped = 0
    for oa, ob in zip(report_a.window_outcome, report_b.window_outcome):
        if ob > 0:
            speed.append(oa / ob)
        else:
            speed.append(None)
            skipped += 1
    return EventLedger(
        t_s=list(report_a.event_times),
        investment_a=list(report_a.window_rescale_loss),
        return_a=list(report_a.window_outcome),
        investment_b=list(report_b.window_rescale_loss),
        return_b=list(report_b.window_outcome),
        speedup=speed,
        skipped=skipped,
    )


@dataclass
class EfficiencyReport:
    resource_node_hours: float
    eq_nodes: float
    a_e: float
    a_s: float
    u_pct: float | None
    window_s: float = DEFAULT_WINDOW_S
    per_window: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def write_windows_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["start_s", "end_s", "eq_nodes", "a_e", "a_s", "u_pct"])
            for row in self.per_window:
                w.writerow([row["start_s"], row["end_s"], row["eq_nodes"], row["a_e"],
                            row["a_s"], "" if row["u_pct"] is None else row["u_pct"]])


def efficiency(report: "SimulationReport", log_: "EventLog", trainers: Sequence[TrainerSpec],
               window_s: float = DEFAULT_WINDOW_S) -> EfficiencyReport:
    """Overall and windowed utilization efficiency of a simulation run."""
    t0, t1 = report.t_start_s, report.t_end_s
    node_hours = resource_integral(log_, t0, t1)
    if t1 > t0:
        n_eq = equivalent_nodes(log_, t0, t1)
        a_s = static_baseline_outcome(trainers, n_eq, t1 - t0)
    else:
        n_eq, a_s = 0.0, 0.0
    a_e = report.a_e
    u = utilization_efficiency(a_e, a_s) if a_s > 0 else None
    windows = []
    if window_s and window_s > 0 and t1 > t0:
        start = t0
        while start < t1:
            end = min(start + window_s, t1)
            w_eq = equivalent_nodes(log_, start, end)
            w_as = static_baseline_outcome(trainers, w_eq, end - start)
            w_ae = report.samples_between(start, end)
            windows.append({
                "start_s": start, "end_s": end, "eq_nodes": w_eq, "a_e": w_ae, "a_s": w_as,
                "u_pct": utilization_efficiency(w_ae, w_as) if w_as > 0 else None,
            })
            start = end
    return EfficiencyReport(node_hours, n_eq, a_e, a_s, u, window_s, windows)


__all__ = [
    "resource_integral", "equivalent_nodes", "static_allocation", "static_baseline_outcome",
    "utilization_efficiency", "UndefinedEfficiencyError", "per_event_ledger", "EventLedger",
    "EfficiencyReport", "efficiency", "DEFAULT_WINDOW_S",
]
