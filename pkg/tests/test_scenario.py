import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrsim.runner import run_scenario
from rrsim.scenario import (
    ScenarioConfig,
    ScenarioError,
    WorkloadModel,
    format_scenario,
    gen_workload,
    default_config,
    parse_scenario,
    workload_end,
)
from rrsim.sim import RngBank

DEFAULT_TEXT = """
# 100 nodes, four regions, three servers
topology.n = 100
radio.range = 80
grid.regions = 4
protocol.name = rr
protocol.s_min = 3
workload.insertions = 30
workload.lookups = 300
workload.lookup_rate = 2
duration = 200
"""


def test_default_text_parses():
    cfg = parse_scenario(DEFAULT_TEXT)
    assert cfg == default_config()
    assert workload_end(cfg) <= cfg.duration


def test_negative_rate_rejected():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario("workload.lookup_rate = -1\n")
    assert any("lookup_rate" in p for p in exc.value.problems)


def test_every_problem_reported():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario("grid.regions = 5\nprotocol.name = chord\nbogus.field = 1\ndynamics.failure_fraction = 2\n")
    probs = "\n".join(exc.value.problems)
    for frag in ("grid.regions", "protocol.name", "bogus.field", "failure_fraction"):
        assert frag in probs


def test_duration_must_cover_workload():
    with pytest.raises(ScenarioError):
        parse_scenario("duration = 20\n")


def test_density_derives_bounds():
    cfg = parse_scenario("topology.n = 400\nduration = 200\n")
    b = cfg.bounds()
    assert b.width == b.height == pytest.approx(math.sqrt(400 * 1024))


def test_explicit_bounds_win():
    cfg = parse_scenario("topology.width = 500\ntopology.height = 300\n")
    assert (cfg.bounds().width, cfg.bounds().height) == (500, 300)


def test_region_population_sets_grid():
    cfg = ScenarioConfig().with_(**{"topology.n": 1600, "topology.region_population": 100})
    assert cfg.region_count() == 16 and cfg.grid_obj().R == 16


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5000), st.sampled_from(["rr", "ght", "ght_star", "flooding", "centralized"]),
       st.floats(0, 1), st.floats(0, 20), st.sampled_from(["detailed", "high_level"]), st.booleans())
def test_config_round_trip(n, proto, err, speed, mode, aggregate):
    cfg = ScenarioConfig().with_(**{"topology.n": n, "protocol.name": proto, "dynamics.error_fraction": err,
                                    "dynamics.max_speed": speed, "mode": mode, "workload.aggregate": aggregate})
    assert parse_scenario(format_scenario(cfg)) == cfg


def test_service_workload_shape():
    cfg = default_config()
    ops = gen_workload(cfg, RngBank(1)["workload"])
    ins = [o for o in ops if o.kind == "insert"]
    look = [o for o in ops if o.kind == "lookup"]
    assert (len(ins), len(look)) == (30, 300)
    assert {o.key for o in look} <= {o.key for o in ins}
    assert all(0 <= o.origin < 100 for o in ops)
    assert ops == sorted(ops, key=lambda o: o.time)
    assert WorkloadModel.from_config(cfg).lir == 10


def test_event_workload_shape():
    cfg = ScenarioConfig().with_(**{"workload.model": "event", "workload.event_types": 20,
                                    "workload.events_per_type": 5, "workload.queries": 5, "duration": 60.0})
    ops = gen_workload(cfg, RngBank(2)["workload"])
    look = [o for o in ops if o.kind == "lookup"]
    assert len(ops) - len(look) == 100 and len(look) == 5
    assert {o.origin for o in look} == {0}  # single gateway
    m = WorkloadModel.from_config(cfg)
    assert m.lir == 0.05 < 1


def test_no_insertions_means_not_found():
    cfg = ScenarioConfig().with_(**{"workload.insertions": 0, "workload.lookups": 20, "duration": 30.0})
    res = run_scenario(cfg)
    assert res.metrics.lookup_status_counts() == {"success": 0, "not_found": 20, "failure": 0}


def test_issued_ops_match_workload():
    res = run_scenario(ScenarioConfig().with_(**{"workload.lookups": 50, "duration": 40.0}))
    assert res.metrics.issued_ops == len(res.workload) == 80
    assert len(res.metrics.lookup_outcomes) + len(res.metrics.insert_outcomes) == 80


def test_run_seed_leaves_topology_alone():
    a = run_scenario(ScenarioConfig().with_(**{"seed": 1, "duration": 30.0, "workload.lookups": 10}))
    b = run_scenario(ScenarioConfig().with_(**{"seed": 2, "duration": 30.0, "workload.lookups": 10}))
    assert (a.world.true_xy() == b.world.true_xy()).all()
    assert a.workload != b.workload


def test_topology_seed_leaves_workload_alone():
    a = run_scenario(ScenarioConfig().with_(**{"topology.seed": 1, "duration": 30.0, "workload.lookups": 10}))
    b = run_scenario(ScenarioConfig().with_(**{"topology.seed": 2, "duration": 30.0, "workload.lookups": 10}))
    assert not (a.world.true_xy() == b.world.true_xy()).all()
    assert a.workload == b.workload
