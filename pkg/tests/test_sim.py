import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2_contingency

from rrsim.runner import run_scenario
from rrsim.scenario import ScenarioConfig
from rrsim.sim import CATEGORIES, EventCapExceeded, RngBank, RngStream, SchedulingError, Simulator


def test_same_time_fires_in_call_order():
    sim, out = Simulator(), []
    sim.schedule_at(5.0, out.append, "a")
    sim.schedule_at(5.0, out.append, "b")
    sim.run()
    assert out == ["a", "b"]


def test_fires_in_time_order():
    sim, out = Simulator(), []
    for t in (3, 1, 2):
        sim.schedule_at(t, out.append, t)
    sim.run()
    assert out == [1, 2, 3]


def test_cancel_before_fire():
    sim, out = Simulator(), []
    ev = sim.schedule_at(1.0, out.append, "x")
    sim.schedule_at(2.0, out.append, "y")
    assert len(sim) == 2
    sim.cancel(ev)
    assert len(sim) == 1
    sim.run()
    assert out == ["y"]


def test_schedule_in_past_rejected():
    sim = Simulator()
    sim.schedule_at(2.0, lambda: None)
    sim.run()
    with pytest.raises(SchedulingError):
        sim.schedule_at(1.0, lambda: None)


def test_event_cap():
    sim = Simulator(max_events=10)

    def again():
        sim.schedule(1.0, again)

    sim.schedule(0.0, again)
    with pytest.raises(EventCapExceeded):
        sim.run()


def test_run_until_advances_clock():
    sim = Simulator()
    sim.schedule_at(50.0, lambda: None)
    sim.run(until=10.0)
    assert sim.now == 10.0 and len(sim) == 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=60))
def test_clock_monotone(times):
    sim, seen = Simulator(), []

    def fire():
        seen.append(sim.now)
        if len(seen) < 200:
            sim.schedule(0.5 * (len(seen) % 3), lambda: seen.append(sim.now))

    for t in times:
        sim.schedule_at(t, fire)
    sim.run()
    assert seen == sorted(seen)


def test_uniform01_range():
    s = RngStream(1, "x")
    vals = [s.uniform01() for _ in range(10_000)]
    assert min(vals) >= 0.0 and max(vals) < 1.0


def test_uniform_int_covers_range():
    s = RngStream(1, "x")
    assert {s.uniform_int(4) for _ in range(500)} == {0, 1, 2, 3}


def test_exp_mean():
    s = RngStream(2, "x")
    assert np.mean([s.exp(2.0) for _ in range(20_000)]) == pytest.approx(0.5, rel=0.05)


def test_labels_independent():
    a, b = RngStream(7, "placement"), RngStream(7, "workload")
    xa = np.array([a.uniform01() for _ in range(10_000)])
    xb = np.array([b.uniform01() for _ in range(10_000)])
    assert not np.array_equal(xa, xb)
    table, _, _ = np.histogram2d(xa, xb, bins=8)
    _, p, _, _ = chi2_contingency(table)
    assert p > 1e-3


def test_same_seed_label_reproducible():
    a, b = RngBank(5)["mac"], RngBank(5)["mac"]
    assert [a.bits64() for _ in range(20)] == [b.bits64() for _ in range(20)]


def _cfg(**over):
    return ScenarioConfig().with_(**over)


def test_empty_workload_only_beacons():
    cfg = _cfg(**{"topology.n": 10, "workload.insertions": 0, "workload.lookups": 0, "duration": 10.0})
    m = run_scenario(cfg).metrics
    assert not m.lookup_outcomes and not m.insert_outcomes
    assert m.total("insertion", "lookup", "periodic", "mobility_update", "election") == 0
    # one beacon per node per second, first one at a random phase in [0, 1)
    assert 90 <= m.total("routing_beacon") <= 110


def test_default_scenario_records_all_lookups():
    res = run_scenario(ScenarioConfig())
    assert len(res.metrics.lookup_outcomes) == 300
    assert len(res.metrics.insert_outcomes) == 30


@pytest.mark.parametrize("proto", ["rr", "ght", "flooding", "centralized"])
def test_determinism(proto):
    cfg = _cfg(**{"protocol.name": proto, "duration": 60.0, "workload.lookups": 60,
                  "dynamics.failure_fraction": 0.2, "dynamics.max_speed": 2.0})

    def traced(res):
        res.sim.trace = []

    a, b = run_scenario(cfg, setup=traced), run_scenario(cfg, setup=traced)
    assert a.metrics.to_json() == b.metrics.to_json()
    assert a.sim.trace == b.sim.trace


@pytest.mark.parametrize("proto", ["rr", "ght", "ght_star", "flooding", "centralized"])
def test_metric_conservation(proto):
    """Each transmission lands in one category on one node: the per-node
    category counters add up to the per-kind transmission tally."""
    cfg = _cfg(**{"protocol.name": proto, "duration": 40.0, "workload.lookups": 40,
                  "dynamics.failure_fraction": 0.1})
    m = run_scenario(cfg).metrics
    sent = sum(m.kinds.values())
    assert m.total(*[c for c in CATEGORIES if c != "routing_beacon"]) == sent
    assert sum(int(m.per_node(c).sum()) for c in CATEGORIES) == m.total()
    assert m.hotspot() <= m.total()
