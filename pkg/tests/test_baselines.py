import numpy as np
import pytest

from rrsim.analysis import linear_fit
from rrsim.baselines import CentralizedProtocol, FloodingProtocol
from rrsim.ops import NOT_FOUND, SUCCESS
from rrsim.runner import run_scenario
from rrsim.scenario import ScenarioConfig

from conftest import random_env
from oracles import is_connected, reachable, udg_edges


def connected(seed, n=100):
    while True:
        env = random_env(n, seed=seed)
        if is_connected(n, udg_edges(env.world.true_xy())):
            return env
        seed += 10_000


def test_flooding_insert_is_free():
    env = connected(1)
    p = FloodingProtocol(env.net, env.metrics, env.rngs)
    op = p.insert(3, 1, "v")
    env.sim.run()
    assert op.status == SUCCESS and env.metrics.total() == 0
    assert p.stores[3][1].value == "v"


def test_flooding_lookup_reaches_component():
    env = random_env(100, seed=2)
    p = FloodingProtocol(env.net, env.metrics, env.rngs)
    p.insert(3, 1, "v")
    op = p.lookup(50, 1)
    env.sim.run()
    comp = reachable(100, udg_edges(env.world.true_xy()), 50)
    assert env.metrics.kinds["flood"] == len(comp)
    if 3 in comp:
        assert (op.status, op.result) == (SUCCESS, "v")
        # the reply walks back: at most the network diameter in hops
        assert 0 < env.metrics.kinds["reply"] < 100


def test_flooding_never_inserted_is_not_found():
    env = connected(3)
    p = FloodingProtocol(env.net, env.metrics, env.rngs)
    op = p.lookup(0, 42)
    env.sim.run()
    assert op.status == NOT_FOUND


def test_flooding_total_linear_in_n():
    ns, totals = [100, 1000, 10_000], []
    for n in ns:
        cfg = ScenarioConfig().with_(**{"protocol.name": "flooding", "mode": "high_level", "topology.n": n,
                                        "workload.insertions": 5, "workload.lookups": 20,
                                        "duration": 20.0, "workload.lookup_rate": 2.0})
        totals.append(run_scenario(cfg).metrics.total("lookup"))
    slope, _, r2 = linear_fit(ns, totals)
    assert r2 > 0.99
    assert slope == pytest.approx(20, rel=0.15)  # one transmission per node per lookup


def test_centralized_holds_every_key():
    env = connected(4)
    p = CentralizedProtocol(env.net, env.metrics, env.rngs)
    for k in range(25):
        p.insert(k, k, k)
    env.sim.run()
    assert sorted(p.store) == list(range(25))
    assert p.storage_counts() == {p.central: 25}


def test_centralized_hotspot_counts_replies():
    env = connected(5)
    p = CentralizedProtocol(env.net, env.metrics, env.rngs)
    origins = [v for v in range(100) if v != p.central]
    I, L = 10, 40
    for k in range(I):
        p.insert(origins[k], k, k)
    env.sim.run()
    for j in range(L):
        p.lookup(origins[-1 - j], j % I)
    env.sim.run()
    # the center only answers: one reply per operation
    assert env.metrics.per_node()[p.central] == I + L
    assert env.metrics.success_rate() == 1.0


def test_centralized_dead_center_fails_everything():
    env = connected(6)
    p = CentralizedProtocol(env.net, env.metrics, env.rngs)
    env.world.kill(p.central)
    ops = [p.insert(v, v, v) for v in range(5) if v != p.central]
    env.sim.run()
    assert all(op.status == "failure" for op in ops)


def test_centralized_per_op_cost_grows_as_sqrt_n():
    ns, per_op = [100, 400, 1600], []
    for n in ns:
        vals = []
        for s in (1, 2, 3):
            cfg = ScenarioConfig().with_(**{"protocol.name": "centralized", "mode": "high_level", "topology.n": n,
                                            "topology.seed": s, "seed": s, "workload.insertions": 10,
                                            "workload.lookups": 60, "duration": 40.0})
            res = run_scenario(cfg)
            ops = len(res.workload)
            vals.append(res.metrics.total("insertion", "lookup") / ops)
        per_op.append(np.mean(vals))
    slope, _, r2 = linear_fit(np.sqrt(ns), per_op)
    assert r2 > 0.95 and slope > 0
    assert per_op[2] / per_op[0] == pytest.approx(4.0, rel=0.25)


@pytest.mark.parametrize("name", ["rr", "ght", "ght_star", "centralized", "flooding"])
def test_simulated_hotspot_never_exceeds_total(name):
    variants = [{}, {"dynamics.failure_fraction": 0.3}, {"dynamics.max_speed": 5.0, "grid.regions": 9},
                {"workload.model": "event", "duration": 60.0, "mode": "high_level"}]
    for i, over in enumerate(variants):
        cfg = ScenarioConfig().with_(**{"protocol.name": name, "topology.seed": i + 1, "seed": i + 1,
                                        "duration": 60.0, "workload.lookups": 60, **over})
        sm = run_scenario(cfg).summary()
        assert 0 < sm["hotspot"] <= sm["total_msgs"]
