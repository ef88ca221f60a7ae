import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fragsched.milp import SolveConfig, SolveStatus
from fragsched.model import ClusterState, JobSlot, TrainerSpec, validate_state
from fragsched.policies import (
    Policy,
    PolicyConfig,
    admit_fcfs,
    decide,
    equal_share,
    equal_share_counts,
)
from fragsched.scalability import ScalabilityCurve

CURVE = ScalabilityCurve((1, 2, 4, 8, 64), (1.0, 1.9, 3.5, 6.0, 20.0))
EQ = PolicyConfig(policy=Policy.EQUAL_SHARE)


def job(name, n_min=1, n_max=64, held=()):
    return JobSlot(TrainerSpec(name, n_min, n_max, 10.0, 5.0, 1e9, CURVE), frozenset(held))


def pool(k):
    return frozenset(f"n{i}" for i in range(k))


def test_two_identical_jobs_split_evenly():
    assert equal_share_counts(ClusterState(pool(4), (job("a"), job("b")))) == [2, 2]


def test_remainder_goes_to_earliest():
    state = ClusterState(pool(4), (job("a"), job("b"), job("c")))
    assert equal_share_counts(state) == [2, 1, 1]


def test_minimum_clamps_later_job_to_zero():
    state = ClusterState(pool(4), (job("a", n_min=3), job("b", n_min=3)))
    assert equal_share_counts(state) == [4, 0]


def test_surplus_from_maximum_is_redistributed():
    state = ClusterState(pool(10), (job("a", n_max=2), job("b"), job("c")))
    assert equal_share_counts(state) == [2, 4, 4]


def test_equal_share_decision_keeps_held_nodes():
    state = ClusterState(pool(4), (job("a", held=["n0", "n1", "n2"]), job("b")))
    d = equal_share(state, EQ)
    assert d.status is SolveStatus.HEURISTIC
    assert d.counts == {"a": 2, "b": 2}
    assert d.assignment == {"a": {"n0", "n1"}, "b": {"n2", "n3"}}


def test_admit_fcfs_examples():
    assert admit_fcfs(list("abcde"), running=7, pj_max=10) == ["a", "b", "c"]
    assert admit_fcfs(list("abc"), running=10, pj_max=10) == []
    assert admit_fcfs([], running=0, pj_max=10) == []


@given(st.lists(st.integers(), max_size=20), st.integers(0, 15), st.integers(1, 15))
def test_admission_is_a_queue_prefix(queue, running, pj_max):
    running = min(running, pj_max)
    got = admit_fcfs(queue, running, pj_max)
    assert got == queue[:len(got)]
    assert running + len(got) <= pj_max
    assert len(got) == min(len(queue), pj_max - running)


@st.composite
def states(draw):
    n = draw(st.integers(0, 24))
    nodes = [f"n{i}" for i in range(n)]
    free = list(nodes)
    slots = []
    for j in range(draw(st.integers(1, 6))):
        n_min = draw(st.integers(1, 4))
        n_max = draw(st.integers(n_min, 16))
        k = draw(st.integers(0, min(len(free), n_max)))
        if k and k < n_min:
            k = 0
        held, free = free[:k], free[k:]
        slots.append(job(f"j{j}", n_min, n_max, held))
    return ClusterState(frozenset(nodes), tuple(slots))


def changed_nodes(state, decision):
    return sum(len(s.nodes ^ decision.assignment[s.spec.name]) for s in state.jobs)


@settings(max_examples=200, deadline=None)
@given(states())
def test_equal_share_output_is_valid_without_migration(state):
    d = equal_share(state, EQ)
    new = ClusterState(state.idle_nodes, tuple(JobSlot(s.spec, d.assignment[s.spec.name])
                                          for s in state.jobs))
    assert validate_state(new) == []
    assert sum(d.counts.values()) <= state.n_nodes
    for s in state.jobs:
        # no migration: the symmetric difference is exactly the count change
        assert len(s.nodes ^ d.assignment[s.spec.name]) == abs(len(s.nodes) - d.counts[s.spec.name])


@given(st.integers(0, 64), st.integers(1, 10))
def test_identical_unbounded_jobs_differ_by_at_most_one(n, j):
    state = ClusterState(pool(n), tuple(job(f"j{i}", 1, 64) for i in range(j)))
    counts = equal_share_counts(state)
    assert sum(counts) == n
    assert max(counts) - min(counts) <= 1


def test_decide_dispatch():
    state = ClusterState(pool(6), (job("a"), job("b")))
    assert decide(state, EQ).status is SolveStatus.HEURISTIC
    dp = decide(state, PolicyConfig(solver="count-dp"))
    bb = decide(state, PolicyConfig(solver="bb"))
    assert dp.status is bb.status is SolveStatus.OPTIMAL
    assert dp.objective_value == pytest.approx(bb.objective_value, rel=1e-9)


def test_policy_config_validation():
    with pytest.raises(ValueError):
        PolicyConfig(pj_max=0)
    with pytest.raises(ValueError):
        PolicyConfig(solver="gurobi")
    assert PolicyConfig(solve=SolveConfig(timeout_ms=0)).solve.timeout_ms == 0
