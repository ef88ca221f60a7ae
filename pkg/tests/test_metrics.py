import dataclasses
import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fragsched.fixtures import single_job
from fragsched.metrics import (
    UndefinedEfficiencyError,
    efficiency,
    equivalent_nodes,
    per_event_ledger,
    resource_integral,
    static_allocation,
    static_baseline_outcome,
    utilization_efficiency,
)
from fragsched.model import Event, TrainerSpec
from fragsched.scalability import ScalabilityCurve
from fragsched.simulator import SimulationConfig, run
from fragsched.trace import EventLog, SynthConfig, synth

LINEAR = ScalabilityCurve((1, 4), (1000.0, 4000.0))
CONCAVE = ScalabilityCurve((1, 2, 3, 4), (1.0, 1.8, 2.4, 2.8))


def nodes(prefix, k):
    return tuple(f"{prefix}{i}" for i in range(k))


def three_then_five():
    return EventLog((Event(0.0, nodes("a", 3)), Event(1800.0, nodes("b", 2))), 3600.0)


def test_three_then_five_nodes():
    log = three_then_five()
    assert resource_integral(log, 0.0, 3600.0) == pytest.approx(4.0, abs=1e-12)
    assert equivalent_nodes(log, 0.0, 3600.0) == pytest.approx(4.0, abs=1e-12)


def test_constant_and_empty_pools():
    log = EventLog((Event(0.0, nodes("a", 4)),), 3600.0)
    assert resource_integral(log, 0.0, 3600.0) == 4.0
    assert equivalent_nodes(log, 900.0, 1800.0) == 4.0
    gone = EventLog((Event(0.0, nodes("a", 2)), Event(10.0, (), nodes("a", 2))), 3600.0)
    assert resource_integral(gone, 10.0, 3600.0) == 0.0


def test_window_clipping():
    log = three_then_five()
    assert resource_integral(log, -100.0, 0.0) == 0.0
    assert resource_integral(log, 5.0, 5.0) == 0.0
    assert resource_integral(log, 1800.0, 0.0) == 0.0
    assert resource_integral(log, 900.0, 2700.0) == pytest.approx(4.0 * 0.5, abs=1e-12)
    with pytest.raises(ValueError):
        equivalent_nodes(log, 10.0, 10.0)


def random_log(seed):
    return synth(SynthConfig(12, 30.0, 600.0, 2 * 3600.0, mean_batch=1.5), seed)


def test_integral_additive_over_random_splits():
    rng = np.random.default_rng(7)
    for seed in range(100):
        log = random_log(seed)
        t0, t2 = 0.0, log.t_end_s
        t1 = float(rng.uniform(t0, t2))
        whole = resource_integral(log, t0, t2)
        assert resource_integral(log, t0, t1) + resource_integral(log, t1, t2) == \
            pytest.approx(whole, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5000), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_equivalent_nodes_between_pool_extremes(seed, u, v):
    log = random_log(seed)
    if not log.events:
        return
    a, b = sorted((u, v))
    t0 = log.t_start_s + a * (log.t_end_s - log.t_start_s)
    t1 = log.t_start_s + b * (log.t_end_s - log.t_start_s)
    if not t1 > t0:
        return
    sizes = log.pool_sizes()
    n_eq = equivalent_nodes(log, t0, t1)
    assert min(sizes) - 1e-9 <= n_eq <= max(sizes) + 1e-9


def spec(name, curve, n_max=4, total=1e12):
    return TrainerSpec(name, 1, n_max, 0.0, 0.0, total, curve)


def test_static_outcome_linear_job():
    assert static_baseline_outcome([spec("j", LINEAR)], 4.0, 100.0) == pytest.approx(400000.0)


def test_static_outcome_floors_equivalent_nodes():
    assert static_baseline_outcome([spec("j", LINEAR)], 4.999, 1.0) == pytest.approx(4000.0)


def test_static_outcome_concave_pair_splits_evenly():
    pair = [spec("a", CONCAVE), spec("b", CONCAVE)]
    assert static_allocation(pair, 4) == {"a": 2, "b": 2}
    assert static_baseline_outcome(pair, 4.0, 1.0) == pytest.approx(3.6, rel=1e-12)


def test_static_outcome_without_nodes(caplog):
    with caplog.at_level(logging.WARNING, logger="fragsched.metrics"):
        assert static_baseline_outcome([spec("j", LINEAR)], 0.0, 100.0) == 0.0
    assert "no admissible allocation" in caplog.text
    with pytest.raises(ValueError):
        static_baseline_outcome([spec("j", LINEAR)], 4.0, 0.0)


def test_utilization_efficiency():
    assert utilization_efficiency(5.0, 5.0) == 100.0
    assert utilization_efficiency(4.0, 5.0) == pytest.approx(80.0)
    with pytest.raises(UndefinedEfficiencyError):
        utilization_efficiency(1.0, 0.0)


def test_static_run_without_costs_is_fully_efficient():
    log = EventLog((Event(0.0, nodes("n", 4)),), 3600.0)
    trainers = [spec("j", LINEAR)]
    report = run(log, trainers, SimulationConfig())
    eff = efficiency(report, log, trainers)
    assert report.rescale_cost_samples == 0.0 and report.preempt_cost_samples == 0.0
    assert eff.u_pct == pytest.approx(100.0, rel=1e-12)
    assert len(eff.per_window) == 1 and eff.per_window[0]["u_pct"] == pytest.approx(100.0)


def test_windows_tile_the_run():
    log = three_then_five()
    trainers = [spec("j", LINEAR)]
    eff = efficiency(run(log, trainers, SimulationConfig()), log, trainers, window_s=1000.0)
    bounds = [(w["start_s"], w["end_s"]) for w in eff.per_window]
    assert bounds == [(0.0, 1000.0), (1000.0, 2000.0), (2000.0, 3000.0), (3000.0, 3600.0)]
    assert sum(w["a_e"] for w in eff.per_window) == pytest.approx(eff.a_e, rel=1e-12)
    assert json.loads(eff.to_json())["eq_nodes"] == pytest.approx(4.0)


def test_ledger_against_itself():
    log, trainers = single_job()
    report = run(log, trainers, SimulationConfig())
    ledger = per_event_ledger(report, report)
    assert ledger.speedup == [1.0] and ledger.skipped == 0
    assert ledger.mean_speedup() == 1.0


def test_ledger_hand_pair_and_skips():
    log, trainers = single_job()
    base = run(log, trainers, SimulationConfig())
    a = dataclasses.replace(base, window_outcome=[200.0])
    b = dataclasses.replace(base, window_outcome=[100.0])
    assert per_event_ledger(a, b).speedup == [2.0]
    zero = dataclasses.replace(base, window_outcome=[0.0])
    ledger = per_event_ledger(a, zero)
    assert ledger.speedup == [None] and ledger.skipped == 1 and ledger.mean_speedup() is None


def test_ledger_rejects_different_logs():
    log, trainers = single_job()
    a = run(log, trainers, SimulationConfig())
    other = EventLog((Event(0.0, nodes("n", 3)),), 2000.0)
    b = run(other, trainers, SimulationConfig())
    with pytest.raises(ValueError):
        per_event_ledger(a, b)
