import dataclasses
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fragsched import simulator
from fragsched.fixtures import diverse_trainers, single_job
from fragsched.milp import SolveConfig, SolveStatus, make_decision
from fragsched.model import ClusterState, Event, JobSlot, TrainerSpec
from fragsched.policies import Policy, PolicyConfig
from fragsched.scalability import ScalabilityCurve, evaluate
from fragsched.simulator import (
    PAUSE_PREEMPT,
    PAUSE_RESCALE,
    SimulationConfig,
    SimulationError,
    TrainerTimeline,
    accrue,
    apply_decision,
    job_rate,
    run,
)
from fragsched.trace import EventLog, SynthConfig, synth

LINEAR = ScalabilityCurve((1, 16), (100.0, 1600.0))


def nodes(prefix, k):
    return tuple(f"{prefix}{i:02d}" for i in range(k))


def make_job(spec, held=()):
    job = simulator._Job(spec, TrainerTimeline(spec.name, spec.arrival_s))
    job.nodes = frozenset(held)
    return job


def spec(name="j", n_min=1, n_max=16, r_up=20.0, r_dw=5.0, total=1e12, arrival=0.0):
    return TrainerSpec(name, n_min, n_max, r_up, r_dw, total, LINEAR, arrival)


def test_single_job_closed_form():
    log, trainers = single_job()
    report = run(log, trainers, SimulationConfig())
    tl = report.timelines["linear"]
    assert tl.admit_s == 0.0
    assert tl.completion_s == pytest.approx(10.0 + 4e6 / 4000.0, abs=1e-6)
    assert tl.intervals == [(0.0, 10.0, 4, True), (10.0, tl.completion_s, 4, False)]
    assert report.a_e == pytest.approx(4e6)


def test_second_job_admitted_at_first_completion():
    log, (one,) = single_job()
    log = EventLog(log.events, 3000.0)
    two = dataclasses.replace(one, name="linear2")
    report = run(log, [one, two], SimulationConfig(PolicyConfig(pj_max=1)))
    first, second = report.timelines["linear"], report.timelines["linear2"]
    assert second.admit_s == first.completion_s
    assert second.completion_s == pytest.approx(first.completion_s + 1010.0, abs=1e-6)
    assert "completion+admission" in [d["trigger"] for d in report.decisions]


def test_empty_log_accrues_nothing():
    report = run(EventLog((), 100.0), [spec("a"), spec("b")], SimulationConfig())
    assert report.a_e == 0.0
    assert all(tl.completion_s is None and tl.samples == 0.0 for tl in report.timelines.values())


def test_scale_up_pauses_new_allocation():
    s = spec(n_max=11, r_up=20.0)
    job = make_job(s, nodes("n", 10))
    state = ClusterState(frozenset(nodes("n", 11)), (JobSlot(s, job.nodes),))
    decision = make_decision(state, [11], SolveConfig(), SolveStatus.OPTIMAL)
    assert apply_decision([job], decision, 100.0) == 20.0
    assert job.count == 11 and job.pause_until == 120.0
    end, finished, deltas, lost = accrue([job], 100.0, 130.0)
    assert deltas["j"] == pytest.approx(1100.0 * 10)
    assert lost[PAUSE_RESCALE] == pytest.approx(1100.0 * 20)
    assert job.timeline.intervals == [(100.0, 120.0, 11, True), (120.0, 130.0, 11, False)]


def test_unchanged_job_is_not_paused():
    s = spec()
    job = make_job(s, nodes("n", 3))
    state = ClusterState(frozenset(nodes("n", 3)), (JobSlot(s, job.nodes),))
    decision = make_decision(state, [3], SolveConfig(), SolveStatus.OPTIMAL)
    assert apply_decision([job], decision, 5.0) == 0.0
    assert job.timeline.rescales == []
    assert accrue([job], 5.0, 6.0)[2]["j"] == 300.0


def test_new_decision_cancels_remaining_pause():
    s = spec(r_up=20.0, r_dw=5.0)
    job = make_job(s, nodes("n", 4))
    state = ClusterState(frozenset(nodes("n", 6)), (JobSlot(s, job.nodes),))
    apply_decision([job], make_decision(state, [6], SolveConfig(), SolveStatus.OPTIMAL), 0.0)
    state = ClusterState(frozenset(nodes("n", 6)), (JobSlot(s, job.nodes),))
    apply_decision([job], make_decision(state, [5], SolveConfig(), SolveStatus.OPTIMAL), 8.0)
    assert job.pause_until == 13.0


def test_forced_loss_pauses_survivors():
    s = spec(n_max=5, r_up=0.0, r_dw=7.0)
    log = EventLog((Event(0.0, nodes("n", 5)), Event(100.0, (), ("n00", "n01"))), 200.0)
    report = run(log, [s], SimulationConfig())
    tl = report.timelines["j"]
    assert [(r.from_n, r.to_n, r.pause_s, r.kind) for r in tl.rescales if r.kind == PAUSE_PREEMPT] == \
        [(5, 3, 7.0, PAUSE_PREEMPT)]
    assert (100.0, 107.0, 3, True) in tl.intervals
    assert report.decisions[-1]["direction"] == {"j": "unchanged"}
    assert report.preempt_cost_samples == pytest.approx(300.0 * 7.0)
    assert report.rescale_cost_samples == 0.0


def test_losing_every_node_keeps_progress():
    s = spec(n_max=2, r_up=0.0)
    log = EventLog((Event(0.0, nodes("n", 2)), Event(10.0, (), nodes("n", 2)),
                    Event(20.0, nodes("m", 2))), 30.0)
    report = run(log, [s], SimulationConfig())
    assert report.timelines["j"].samples == pytest.approx(200.0 * 20.0)


def test_accrue_examples():
    idle = make_job(spec())
    assert accrue([idle], 0.0, 50.0)[2]["j"] == 0.0
    busy = make_job(spec(), ["a"])
    assert accrue([busy], 0.0, 10.0)[2]["j"] == 1000.0
    near = make_job(spec(total=1000.0), ["a"])
    near.done = 750.0
    end, finished, deltas, _ = accrue([near], 40.0, 50.0)
    assert end == pytest.approx(42.5) and finished == [near] and near.done == 1000.0
    with pytest.raises(ValueError):
        accrue([busy], 10.0, 0.0)


def test_rate_is_zero_outside_size_range():
    s = spec(n_min=2, n_max=4)
    assert job_rate(s, 1) == 0.0 and job_rate(s, 5) == 0.0
    assert job_rate(s, 3) == evaluate(LINEAR, 3)


def small_case(seed, n_jobs, policy):
    log = synth(SynthConfig(10, 12.0, 1500.0, 3 * 3600.0, mean_batch=2.0), seed)
    trainers = diverse_trainers(n=n_jobs, mean_gap_s=600.0, total_samples=2e6, seed=seed)
    cfg = SimulationConfig(PolicyConfig(pj_max=3, policy=policy))
    return log, trainers, cfg


def pool_size_at(log, t):
    n = 0
    for e in log.events:
        if e.t_s > t:
            break
        n += len(e.joins) - len(e.leaves)
    return n


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.sampled_from(list(Policy)))
def test_replay_invariants(seed, n_jobs, policy):
    log, trainers, cfg = small_case(seed, n_jobs, policy)
    report = run(log, trainers, cfg)
    total = 0.0
    probes = set()
    for name, tl in report.timelines.items():
        s = report.trainers[name]
        # contiguous, non-overlapping, samples equal the unpaused integral
        for (a0, a1, _, _), (b0, _, _, _) in zip(tl.intervals, tl.intervals[1:]):
            assert a1 == b0
        assert all(e > s0 for s0, e, _, _ in tl.intervals)
        acc = sum(job_rate(s, n) * (e - s0) for s0, e, n, p in tl.intervals if not p)
        assert tl.samples == pytest.approx(acc, rel=1e-9, abs=1e-6)
        if tl.completion_s is not None:
            assert tl.samples >= s.total_samples * (1 - 1e-12)
            assert tl.intervals[-1][1] == tl.completion_s
        total += tl.samples
        probes.update((s0 + e) / 2 for s0, e, _, _ in tl.intervals)
    assert report.a_e == pytest.approx(total, rel=1e-9, abs=1e-6)
    for t in probes:
        held = sum(n for tl in report.timelines.values()
                   for s0, e, n, _ in tl.intervals if s0 <= t < e)
        assert held <= pool_size_at(log, t)
    # work bound: paused time produces nothing
    bound = sum(job_rate(report.trainers[k], n) * (e - s0)
                for k, tl in report.timelines.items() for s0, e, n, _ in tl.intervals)
    assert report.a_e <= bound + 1e-6
    assert report.a_e + report.rescale_cost_samples + report.preempt_cost_samples == \
        pytest.approx(bound, rel=1e-9, abs=1e-6)


def test_no_job_holds_a_departed_node(monkeypatch):
    seen = []
    real = simulator.decide

    def spy(state, cfg):
        for slot in state.jobs:
            assert slot.nodes <= state.idle_nodes
        seen.append(state)
        return real(state, cfg)

    monkeypatch.setattr(simulator, "decide", spy)
    log, trainers, cfg = small_case(3, 5, Policy.MILP)
    run(log, trainers, cfg)
    assert seen


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_zero_cost_join_only_milp_beats_equal_share(seed, n_jobs):
    log = synth(SynthConfig(24, 10.0, 1e12, 2 * 3600.0, mean_batch=3.0), seed)
    assert all(not e.leaves for e in log.events)
    trainers = [dataclasses.replace(t, r_up_s=0.0, r_dw_s=0.0, arrival_s=0.0, total_samples=1e15)
                for t in diverse_trainers(n=n_jobs, seed=seed)]
    milp = run(log, trainers, SimulationConfig(PolicyConfig(pj_max=n_jobs)))
    eq = run(log, trainers, SimulationConfig(PolicyConfig(pj_max=n_jobs, policy=Policy.EQUAL_SHARE)))
    assert milp.a_e >= eq.a_e * (1 - 1e-12)


def read_all(paths):
    return {os.path.basename(p): open(p, "rb").read() for p in paths.values()}


def test_reports_are_byte_identical(tmp_path):
    log, trainers, cfg = small_case(11, 5, Policy.MILP)
    a = read_all(run(log, trainers, cfg).write(tmp_path / "a"))
    b = read_all(run(log, trainers, cfg).write(tmp_path / "b"))
    assert a == b and set(a) == {"summary.json", "events.csv", "timelines.csv"}
    assert a["events.csv"].startswith(b"t_s,trigger,n_idle,status,objective_value,pause_s,direction")


def test_timeout_zero_keeps_every_allocation():
    log, trainers, _ = small_case(5, 5, Policy.MILP)
    cfg = SimulationConfig(PolicyConfig(pj_max=3, solve=SolveConfig(timeout_ms=0)))
    report = run(log, trainers, cfg)
    assert report.decisions
    for d in report.decisions:
        assert d["status"] == "TimeoutKeptCurrent"
        assert d["counts"] == d["counts_before"]


def test_horizon_truncates_replay():
    log, trainers = single_job()
    report = run(log, trainers, SimulationConfig(horizon_s=500.0))
    assert report.t_end_s == 500.0
    assert report.timelines["linear"].completion_s is None
    assert report.a_e == pytest.approx(4000.0 * 490.0)
    with pytest.raises(ValueError):
        SimulationConfig(horizon_s=0.0)


def test_policy_failure_is_wrapped(monkeypatch):
    def boom(state, cfg):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(simulator, "decide", boom)
    log, trainers = single_job()
    with pytest.raises(SimulationError, match="t=0.0"):
        run(log, trainers, SimulationConfig())


def test_duplicate_trainer_names_rejected():
    with pytest.raises(ValueError):
        run(EventLog((), 10.0), [spec("a"), spec("a")], SimulationConfig())


def test_charged_solver_time_lengthens_pause():
    log, trainers = single_job()
    report = run(log, trainers, SimulationConfig(charge_solver_time=True))
    assert report.timelines["linear"].rescales[0].pause_s > 10.0
