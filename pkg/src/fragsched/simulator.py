"""Event-driven replay of an idle-node trace against a queue of elastic trainers.

Triggers are node events, trainer arrivals and trainer completions.  At each
trigger departed nodes are taken from their jobs (forced preemption), the
FCFS gate admits waiting trainers, the policy re-solves the allocation and
rescaled jobs pause on their whole new allocation.  Work accrues between
triggers at the curve rate of each job's node count.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .milp.objective import AllocationDecision, Direction
from .model import ClusterState, JobSlot, NodeId, TrainerSpec
from .policies import PolicyConfig, admit_fcfs, decide
from .scalability import evaluate
from .trace import EventLog

PAUSE_RESCALE = "rescale"
PAUSE_PREEMPT = "preempt"
_DONE_TOL = 1e-9


class SimulationError(RuntimeError):
    """The allocation policy failed during replay."""


@dataclass(frozen=True)
class SimulationConfig:
    policy_cfg: PolicyConfig = field(default_factory=PolicyConfig)
    charge_solver_time: bool = False
    horizon_s: float | None = None

    def __post_init__(self):
        if self.horizon_s is not None and not self.horizon_s > 0:
            raise ValueError("horizon_s must be positive")


@dataclass
class RescaleRecord:
    t_s: float
    direction: str
    from_n: int
    to_n: int
    pause_s: float
    kind: str


@dataclass
class TrainerTimeline:
    name: str
    arrival_s: float
    admit_s: float | None = None
    completion_s: float | None = None
    samples: float = 0.0
    # (start_s, end_s, n, paused)
    intervals: list[tuple[float, float, int, bool]] = field(default_factory=list)
    rescales: list[RescaleRecord] = field(default_factory=list)

    @property
    def runtime_s(self) -> float | None:
        if self.completion_s is None or self.admit_s is None:
            return None
        return self.completion_s - self.admit_s

    def add_interval(self, start: float, end: float, n: int, paused: bool) -> None:
        if end <= start:
            return
        if self.intervals:
            s0, e0, n0, p0 = self.intervals[-1]
            if e0 == start and n0 == n and p0 == paused:
                self.intervals[-1] = (s0, end, n, paused)
                return
        self.intervals.append((start, end, n, paused))


def job_rate(spec: TrainerSpec, n: int) -> float:
    """Samples per second; zero outside the job's admissible size range."""
    if n < spec.n_min or n > spec.n_max:
        return 0.0
    return evaluate(spec.curve, n)


@dataclass
class SimulationReport:
    trainers: dict[str, TrainerSpec]
    timelines: dict[str, TrainerTimeline]
    decisions: list[dict]
    a_e: float
    rescale_cost_samples: float
    preempt_cost_samples: float
    t_start_s: float
    t_end_s: float
    n_events: int
    event_times: list[float]
    window_outcome: list[float]
    window_rescale_loss: list[float]
    window_preempt_loss: list[float]
    log_fingerprint: tuple
    config: dict = field(default_factory=dict)

    @property
    def rescale_cost_per_event(self) -> float:
        return self.rescale_cost_samples / self.n_events if self.n_events else 0.0

    def mean_runtime_s(self) -> float | None:
        runs = [tl.runtime_s for tl in self.timelines.values() if tl.runtime_s is not None]
        return float(np.mean(runs)) if runs else None

    def samples_between(self, t0: float, t1: float) -> float:
        """Samples processed by all jobs inside [t0, t1]."""
        total = 0.0
        for name, tl in self.timelines.items():
            spec = self.trainers[name]
            for s, e, n, paused in tl.intervals:
                a, b = max(s, t0), min(e, t1)
                if b > a and not paused:
                    total += job_rate(spec, n) * (b - a)
        return total

    def summary(self) -> dict:
        jobs = {}
        for name, tl in self.timelines.items():
            jobs[name] = {
                "arrival_s": tl.arrival_s,
                "admit_s": tl.admit_s,
                "completion_s": tl.completion_s,
                "runtime_s": tl.runtime_s,
                "samples": tl.samples,
                "total_samples": self.trainers[name].total_samples,
                "rescales": sum(1 for r in tl.rescales if r.kind == PAUSE_RESCALE),
                "preemptions": sum(1 for r in tl.rescales if r.kind == PAUSE_PREEMPT),
            }
        statuses: dict[str, int] = {}
        for d in self.decisions:
            statuses[d["status"]] = statuses.get(d["status"], 0) + 1
        return {
            "config": self.config,
            "t_start_s": self.t_start_s,
            "t_end_s": self.t_end_s,
            "a_e": self.a_e,
            "rescale_cost_samples": self.rescale_cost_samples,
            "preempt_cost_samples": self.preempt_cost_samples,
            "n_events": self.n_events,
            "n_decisions": len(self.decisions),
            "rescale_cost_per_event": self.rescale_cost_per_event,
            "completed_jobs": sum(1 for tl in self.timelines.values() if tl.completion_s is not None),
            "mean_runtime_s": self.mean_runtime_s(),
            "decision_status": statuses,
            "jobs": jobs,
        }

    def write(self, out_dir) -> dict[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        paths = {
            "summary": os.path.join(out_dir, "summary.json"),
            "events": os.path.join(out_dir, "events.csv"),
            "timelines": os.path.join(out_dir, "timelines.csv"),
        }
        with open(paths["summary"], "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        names = list(self.trainers)
        with open(paths["events"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "trigger", "n_idle", "status", "objective_value", "pause_s",
                        "direction"] + [f"n:{n}" for n in names])
            for d in self.decisions:
                obj = d["objective_value"]
                changed = ";".join(f"{k}:{v}" for k, v in d["direction"].items() if v != "unchanged")
                w.writerow([repr(d["t_s"]), d["trigger"], d["n_idle"], d["status"],
                            "" if obj is None else repr(obj), repr(d["pause_s"]), changed]
                           + [d["counts"].get(n, "") for n in names])
        with open(paths["timelines"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["job", "start_s", "end_s", "n", "paused"])
            for name, tl in self.timelines.items():
                for s, e, n, paused in tl.intervals:
                    w.writerow([name, repr(s), repr(e), n, int(paused)])
        return paths


class _Job:
    __slots__ = ("spec", "nodes", "done", "pause_until", "pause_kind", "timeline")

    def __init__(self, spec: TrainerSpec, timeline: TrainerTimeline):
        self.spec = spec
        self.nodes: frozenset[NodeId] = frozenset()
        self.done = 0.0
        self.pause_until = -math.inf
        self.pause_kind = PAUSE_RESCALE
        self.timeline = timeline

    @property
    def count(self) -> int:
        return len(self.nodes)

    def pause(self, t: float, seconds: float, kind: str) -> None:
        self.pause_until = t + seconds
        self.pause_kind = kind


def apply_decision(jobs: Sequence[_Job], decision: AllocationDecision, t_s: float,
                   extra_pause_s: float = 0.0) -> float:
    """Install the new map; rescaled jobs pause on their new allocation.

    A rescale cancels whatever pause remains and starts its own.  Returns
    the total pause seconds started.
    """
    started = 0.0
    for job in jobs:
        name = job.spec.name
        new = decision.assignment[name]
        direction = decision.direction[name]
        before = job.count
        job.nodes = frozenset(new)
        if direction is Direction.UNCHANGED:
            continue
        seconds = job.spec.r_up_s if direction is Direction.UP else job.spec.r_dw_s
        seconds = seconds + extra_pause_s if job.count else 0.0
        job.pause(t_s, seconds, PAUSE_RESCALE)
        started += seconds
        job.timeline.rescales.append(
            RescaleRecord(t_s, direction.value, before, job.count, seconds, PAUSE_RESCALE))
    return started


def accrue(jobs: Sequence[_Job], from_s: float, to_s: float):
    """Advance work to ``to_s`` or the first completion, whichever is earlier.

    Returns (end time, finished jobs, samples per job, lost samples by pause kind).
    """
    if to_s < from_s:
        raise ValueError("accrual window runs backwards")
    end = to_s
    crossing = {}
    for job in jobs:
        r = job_rate(job.spec, job.count)
        if r > 0:
            left = job.spec.total_samples - job.done
            tc = max(from_s, job.pause_until) + max(left, 0.0) / r
            crossing[job.spec.name] = tc
            end = min(end, tc)
    deltas: dict[str, float] = {}
    lost = {PAUSE_RESCALE: 0.0, PAUSE_PREEMPT: 0.0}
    finished = []
    for job in jobs:
        n = job.count
        r = job_rate(job.spec, n)
        split = min(max(job.pause_until, from_s), end)
        job.timeline.add_interval(from_s, split, n, True)
        job.timeline.add_interval(split, end, n, False)
        lost[job.pause_kind] += r * (split - from_s)
        delta = r * (end - split)
        tc = crossing.get(job.spec.name)
        if tc is not None and tc <= end + _DONE_TOL * max(1.0, abs(end)):
            delta = job.spec.total_samples - job.done
            finished.append(job)
        job.done += delta
        job.timeline.samples = job.done
        deltas[job.spec.name] = delta
    return end, finished, deltas, lost


def run(log: EventLog, trainers: Sequence[TrainerSpec], cfg: SimulationConfig) -> SimulationReport:
    names = [t.name for t in trainers]
    if len(set(names)) != len(names):
        raise ValueError("trainer names must be unique")
    pcfg = cfg.policy_cfg
    order = sorted(range(len(trainers)), key=lambda i: (trainers[i].arrival_s, i))
    arrivals = deque(trainers[i] for i in order)
    timelines = {t.name: TrainerTimeline(t.name, t.arrival_s) for t in trainers}
    t_stop = cfg.horizon_s if cfg.horizon_s is not None else log.t_end_s
    events = [e for e in log.events if e.t_s <= t_stop]
    n_ev = len(events)

    window_outcome = [0.0] * n_ev
    window_rescale = [0.0] * n_ev
    window_preempt = [0.0] * n_ev
    totals = {"a_e": 0.0, PAUSE_RESCALE: 0.0, PAUSE_PREEMPT: 0.0}
    decisions: list[dict] = []

    pool: set[NodeId] = set()
    queue: list[TrainerSpec] = []
    running: list[_Job] = []
    ev_i = 0
    completed_now = False
    starts = [events[0].t_s] if events else []
    if arrivals:
        starts.append(arrivals[0].arrival_s)
    t = min(starts, default=0.0)
    t_start = log.t_start_s if log.events else 0.0

    while t <= t_stop:
        trigger = []
        if completed_now:
            trigger.append("completion")
        if ev_i < n_ev and events[ev_i].t_s == t:
            ev = events[ev_i]
            ev_i += 1
            trigger.append("nodes")
            gone = set(ev.leaves)
            pool.difference_update(gone)
            pool.update(ev.joins)
            for job in running:
                lost_nodes = job.nodes & gone
                if not lost_nodes:
                    continue
                before = job.count
                job.nodes = job.nodes - lost_nodes
                seconds = job.spec.r_dw_s if job.count else 0.0
                job.pause(t, seconds, PAUSE_PREEMPT)
                job.timeline.rescales.append(
                    RescaleRecord(t, Direction.DOWN.value, before, job.count, seconds, PAUSE_PREEMPT))
        while arrivals and arrivals[0].arrival_s <= t:
            queue.append(arrivals.popleft())
        admitted = admit_fcfs(queue, len(running), pcfg.pj_max)
        if admitted:
            trigger.append("admission")
            del queue[:len(admitted)]
            for spec in admitted:
                tl = timelines[spec.name]
                tl.admit_s = t
                running.append(_Job(spec, tl))

        if trigger and running:
            state = ClusterState(frozenset(pool), tuple(JobSlot(j.spec, j.nodes) for j in running))
            before = {j.spec.name: j.count for j in running}
            t0 = time.perf_counter()
            try:
                decision = decide(state, pcfg)
            except Exception as exc:
                raise SimulationError(f"policy failed at t={t}: {exc}") from exc
            solve_s = time.perf_counter() - t0
            paused = apply_decision(running, decision, t,
                                    extra_pause_s=solve_s if cfg.charge_solver_time else 0.0)
            decisions.append({
                "t_s": t,
                "trigger": "+".join(trigger),
                "n_idle": len(pool),
                "status": decision.status.value,
                "objective_value": decision.objective_value,
                "counts_before": before,
                "counts": dict(decision.counts),
                "direction": {k: v.value for k, v in decision.direction.items()},
                "pause_s": paused,
            })
        completed_now = False

        if t >= t_stop or not (running or queue or arrivals):
            break
        t_next = t_stop
        if ev_i < n_ev:
            t_next = min(t_next, events[ev_i].t_s)
        if arrivals:
            t_next = min(t_next, arrivals[0].arrival_s)
        end, finished, deltas, lost = accrue(running, t, t_next)
        gained = 0.0
        for job in running:
            gained = deltas[job.spec.name] + gained
        totals["a_e"] += gained
        totals[PAUSE_RESCALE] += lost[PAUSE_RESCALE]
        totals[PAUSE_PREEMPT] += lost[PAUSE_PREEMPT]
        w = ev_i - 1
        if w >= 0:
            window_outcome[w] += gained
            window_rescale[w] += lost[PAUSE_RESCALE]
            window_preempt[w] += lost[PAUSE_PREEMPT]
        for job in finished:
            job.timeline.completion_s = end
            running.remove(job)
            completed_now = True
        t = end

    for job in running:
        job.timeline.samples = job.done
    config = {
        "policy": pcfg.policy.value,
        "solver": pcfg.solver,
        "pj_max": pcfg.pj_max,
        "t_fwd_s": pcfg.solve.t_fwd_s,
        "objective": pcfg.solve.metric.value,
        "timeout_ms": pcfg.solve.timeout_ms,
        "charge_solver_time": cfg.charge_solver_time,
        "horizon_s": cfg.horizon_s,
    }
    return SimulationReport(
        trainers={t.name: t for t in trainers},
        timelines=timelines,
        decisions=decisions,
        a_e=totals["a_e"],
        rescale_cost_samples=totals[PAUSE_RESCALE],
        preempt_cost_samples=totals[PAUSE_PREEMPT],
        t_start_s=t_start,
        t_end_s=max(t_stop, t_start),
        n_events=n_ev,
        event_times=[e.t_s for e in events],
        window_outcome=window_outcome,
        window_rescale_loss=window_rescale,
        window_preempt_loss=window_preempt,
        log_fingerprint=log.fingerprint(),
        config=config,
    )


__all__ = ["SimulationConfig", "SimulationReport", "SimulationError", "TrainerTimeline",
           "RescaleRecord", "run", "apply_decision", "accrue", "job_rate"]
