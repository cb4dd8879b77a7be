import math

import numpy as np
import pytest

from rrsim.ops import NOT_FOUND, SUCCESS
from rrsim.rr import RRConfig, RRProtocol, bootstrap_key
from rrsim.world import Bounds

from conftest import Env, random_env
from oracles import is_connected, key_region, udg_edges


def rr(env, **kw):
    kw.setdefault("n_configured", env.world.n)
    return RRProtocol(env.net, env.metrics, env.rngs, RRConfig(**kw))


def connected(seed, n=100, regions=4):
    while True:
        env = random_env(n, seed=seed, regions=regions)
        if is_connected(n, udg_edges(env.world.true_xy())):
            return env
        seed += 10_000


def collect(ops):
    return [(op.status, op.result) for op in ops]


def test_insert_elects_at_least_s_min_servers():
    env = connected(1)
    p = rr(env)
    ops = [p.insert(i, 1000 + i, f"v{i}") for i in range(0, 40, 4)]
    env.sim.run(until=20)
    assert all(op.status == SUCCESS for op in ops)
    for r in range(4):
        if len(env.world.nodes_in_region(r)) >= 3 and r in {key_region(op.key, 4) for op in ops}:
            assert len(p.servers_in(r)) >= 3
    assert min(p.replica_counts().values()) >= 3


# lattice covering everything but region 0 of a 320 m square cut in four
BACKBONE = [(x, y) for x in (100, 160, 220, 280) for y in (100, 160, 220, 280) if x >= 160 or y >= 160]


def with_backbone(region0):
    env = Env(list(region0) + BACKBONE, Bounds(320, 320))
    assert is_connected(env.world.n, udg_edges(env.world.true_xy()))
    assert env.world.nodes_in_region(0) == list(range(len(region0)))
    return env


CLUSTER8 = [(100 + 8 * i, 110 + 8 * (i % 3)) for i in range(8)]


def test_two_node_region_holds_both_replicas():
    env = with_backbone([(130, 140), (150, 120)])
    p = rr(env)
    op = p.insert(5, 77, "x", region=0)
    env.sim.run(until=10)
    assert op.status == SUCCESS
    assert p.servers_in(0) == [0, 1]
    assert p.replica_counts()[77] == 2


def test_stored_keys_match_hash_oracle():
    env = connected(2, regions=16)
    p = rr(env)
    rng = np.random.default_rng(0)
    keys = [int(k) for k in rng.integers(0, 2**62, 60)]
    for i, k in enumerate(keys):
        env.sim.schedule_at(0.5 * i, p.insert, i % 100, k, i)
    env.sim.run(until=60)
    per_region = {}
    for v, st in p.servers.items():
        for k in st.store:
            assert key_region(k, 16) == st.region
            per_region.setdefault(st.region, set()).add(k)
    want = {}
    for k in keys:
        want.setdefault(key_region(k, 16), set()).add(k)
    assert per_region == want


def test_lookup_returns_value_and_not_found():
    env = connected(3)
    p = rr(env)
    p.insert(10, 4242, "payload")
    env.sim.run(until=5)
    hit, miss = p.lookup(60, 4242), p.lookup(61, 999_999)
    env.sim.run(until=15)
    assert (hit.status, hit.result) == (SUCCESS, "payload")
    assert miss.status == NOT_FOUND


def test_cached_lookups_use_anycast():
    env = connected(4)
    p = rr(env)
    p.insert(3, 5, "v")
    env.sim.run(until=5)
    ops = [p.lookup(o, 5) for o in (20, 40, 60, 80)]
    env.sim.run(until=10)
    ops += [p.lookup(o, 5) for o in (21, 41, 61, 81)]
    env.sim.run(until=20)
    assert all(op.status == SUCCESS for op in ops)
    assert env.metrics.kinds["anycast"] > 0


# -- election ------------------------------------------------------------------


def clique_region(seed, n=25):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2)) * 50  # every pair within range
    return Env(pts, Bounds(50, 50), regions=1, seed=seed)


def test_first_round_count_matches_p0():
    firsts, finals, rounds = [], [], []
    for seed in range(100):
        env = clique_region(seed)
        p = rr(env)
        assert p.p0 == pytest.approx(2 * 3 * 1 / 25)
        orig = p._round_done

        def snap(sess, orig=orig, p=p, out=firsts):
            if sess.election.round == 1 and not hasattr(sess, "_seen"):
                sess._seen = True
                out.append(len(p.servers))
            orig(sess)

        p._round_done = snap
        op = p.insert(0, 1, "v")
        env.sim.run(until=20)
        assert op.status == SUCCESS
        finals.append(len(p.servers))
        rounds += p.election_rounds
    assert np.mean(firsts) == pytest.approx(25 * p.p0, rel=0.20)
    assert min(finals) >= 3
    assert max(rounds) <= p.max_election_rounds()


def test_max_election_rounds_formula():
    env = clique_region(0)
    p = rr(env, n_configured=600)  # p0 = 0.01
    assert p.max_election_rounds() == math.ceil(math.log2(100)) + 1
    assert rr(clique_region(0), n_configured=4).max_election_rounds() == 1


def test_no_duplicate_election_under_burst():
    env = connected(5)
    p = rr(env)
    region = key_region(123, 4)
    origins = [v for v in range(100) if env.world.nodes[v].current_region != region][:10]
    for i, o in enumerate(origins):
        env.sim.schedule_at(0.01 * i, p.insert, o, 123, i)
    env.sim.run(until=20)
    assert p.elections_started == 1
    assert 3 <= len(p.servers_in(region)) <= 12


# -- periodic failure checks ------------------------------------------------------


TRIO = [(120, 130), (145, 125), (130, 150)]


def three_server_region():
    """Region 0 is a clique of three servers; the rest is a sparse backbone."""
    env = with_backbone(TRIO)
    p = rr(env, s_min=3)
    p.insert(5, 7, "v", region=0)
    env.sim.run(until=5)
    assert p.servers_in(0) == [0, 1, 2]
    return env, p


def test_failure_check_costs_one_geocast_and_replies():
    env, p = three_server_region()
    before = dict(env.metrics.kinds)
    p.failure_check_tick(0)
    env.sim.run(until=env.sim.now + 2)
    d = {k: env.metrics.kinds[k] - before.get(k, 0) for k in env.metrics.kinds}
    assert d.get("gc_check") == 3  # one transmission per region member
    assert d.get("check_reply") == 2
    assert d.get("gc_insert", 0) == 0


def test_failure_check_reelects_after_losses():
    env = with_backbone(CLUSTER8)
    p = rr(env, n_configured=100)  # small p0 leaves spare candidates
    p.insert(9, 7, "v", region=0)
    env.sim.run(until=5)
    servers = p.servers_in(0)
    assert len(servers) >= 3
    for v in servers[1:]:
        env.world.kill(v)
        p.on_kill(v)
    p.failure_check_tick(servers[0])
    env.sim.run(until=env.sim.now + 5)
    alive = p.servers_in(0)
    assert len(alive) >= 3
    assert all(7 in p.servers[v].store for v in alive)


def test_periodic_cost_independent_of_key_count():
    def periodic(nkeys):
        env = with_backbone(TRIO)
        p = rr(env, check_jitter=0.0)
        for k in range(nkeys):
            p.insert(5, 7 + k, "v", region=0)
        env.sim.run(until=5)
        base = env.metrics.total("periodic")
        env.sim.run(until=105)
        return env.metrics.total("periodic") - base

    assert periodic(1) == periodic(50) > 0


# -- mobility ------------------------------------------------------------------------


def test_position_check_silent_inside_region_and_transfers_on_exit():
    env = with_backbone(CLUSTER8)
    p = rr(env, mobility=True, periodic=False)
    p.insert(9, 7, "v", region=0)
    env.sim.run(until=5)
    s = p.servers_in(0)[0]
    x, y = env.world.nodes[s].true_pos
    env.world.move_node(s, (x + 5, y + 5))
    env.sim.run(until=10)
    assert env.metrics.total("mobility_update") == 0
    env.world.move_node(s, (170, 120))  # region 1
    env.sim.run(until=20)
    assert s not in p.servers
    assert env.metrics.kinds["mobility"] >= 1
    assert env.metrics.kinds["mobility"] <= 3  # one transfer, a few hops
    assert not p.pending_transfers
    assert all(7 in p.servers[v].store for v in p.servers_in(0))


# -- bootstrap -----------------------------------------------------------------------


def test_bootstrap_publish_resolve():
    env = connected(6)
    p = rr(env)
    p.publish(3, "printer", "10.0.0.7")
    env.sim.run(until=5)
    got, unknown = p.resolve(70, "printer"), p.resolve(71, "scanner")
    env.sim.run(until=15)
    assert (got.status, got.result) == (SUCCESS, "10.0.0.7")
    assert unknown.status == NOT_FOUND
    assert bootstrap_key("printer") != bootstrap_key("scanner")


def test_bootstrap_recovers_after_servers_die():
    env = connected(7)
    p = rr(env)
    p.publish(3, "printer", "a")
    env.sim.run(until=5)
    region = next(iter(p.servers.values())).region
    for v in p.servers_in(region):
        env.world.kill(v)
        p.on_kill(v)
    lost = p.resolve(70, "printer")
    env.sim.run(until=15)
    assert lost.status != SUCCESS
    p.publish(4, "printer", "b")
    env.sim.run(until=20)
    again = p.resolve(71, "printer")
    env.sim.run(until=30)
    assert (again.status, again.result) == (SUCCESS, "b")


# -- empty regions -------------------------------------------------------------------


def emptied(seed):
    env = connected(seed)
    for v in env.world.nodes_in_region(3):
        x, y = env.world.nodes[v].true_pos
        env.world.nodes[v].true_pos = (x - 160, y - 160)
    env.world.refresh()
    assert not env.world.nodes_in_region(3)
    if not is_connected(100, udg_edges(env.world.true_xy())):
        return None
    return env


def test_empty_region_uses_proxy_at_closest_node():
    env = next(e for e in map(emptied, range(10, 40)) if e is not None)
    p = rr(env)
    op = p.insert(0, 99, "v", region=3)
    env.sim.run(until=5)
    assert op.status == SUCCESS
    closest = env.world.closest_node(env.grid.center(3))
    proxy_region = env.world.nodes[closest].current_region
    holders = [v for v, st in p.servers.items() if 99 in st.store]
    assert holders and all(p.servers[v].region == proxy_region for v in holders)
    assert all(p.servers[v].store[99].region == 3 for v in holders)
    look = p.lookup(50, 99, region=3)
    env.sim.run(until=10)
    assert look.status == SUCCESS


def test_proxy_records_migrate_when_region_refills():
    env = next(e for e in map(emptied, range(10, 40)) if e is not None)
    p = rr(env, check_interval=5.0)
    p.insert(0, 99, "v", region=3)
    env.sim.run(until=3)
    proxies = [v for v, st in p.servers.items() if 99 in st.store]
    far = max((v for v in range(100) if v not in p.servers),
              key=lambda v: math.dist(env.world.nodes[v].true_pos, (0, 0)))
    # drop a node at the region's corner next to the rest of the network
    x0, y0, _, _ = env.grid.rect(3)
    env.world.move_node(far, (x0 + 5, y0 + 5))
    env.sim.run(until=30)
    assert 99 in p.servers[far].store and p.servers[far].region == 3
    assert not any(99 in p.servers[v].store for v in proxies if p.servers[v].region != 3)
    look = p.lookup(50, 99, region=3)
    env.sim.run(until=40)
    assert look.status == SUCCESS


# -- run-level properties ------------------------------------------------------------


def test_replication_floor_and_locality():
    from rrsim.runner import run_scenario
    from rrsim.scenario import ScenarioConfig

    for seed in (1, 2, 3):
        cfg = ScenarioConfig().with_(**{"topology.seed": seed, "seed": seed, "grid.regions": 9,
                                        "duration": 120.0, "workload.lookups": 100})
        res = run_scenario(cfg)
        p, w = res.protocol, res.world
        pops = {r: len(w.nodes_in_region(r)) for r in range(9)}
        for k, c in p.replica_counts().items():
            assert c >= min(3, pops[key_region(k, 9)]) or pops[key_region(k, 9)] == 0
        for v, st in p.servers.items():
            if w.nodes[v].alive:
                assert w.nodes[v].current_region == st.region


def test_lookup_returns_last_written_value():
    env = connected(9)
    p = rr(env)
    for i, v in enumerate(("a", "b", "c")):
        env.sim.schedule_at(2.0 * i, p.insert, 7 * i, 31337, v)
    env.sim.run(until=6)
    ops = [p.lookup(o, 31337) for o in (11, 55, 90)]
    env.sim.run(until=12)
    assert [(op.status, op.result) for op in ops] == [(SUCCESS, "c")] * 3


def test_static_lookups_all_succeed():
    from rrsim.runner import run_scenario
    from rrsim.scenario import ScenarioConfig

    for R in (4, 9, 16):
        for seed in (1, 2):
            cfg = ScenarioConfig().with_(**{"grid.regions": R, "topology.seed": seed, "seed": seed,
                                            "mode": "high_level", "duration": 80.0, "workload.lookups": 100})
            res = run_scenario(cfg)
            if is_connected(100, udg_edges(res.world.true_xy())):
                assert res.metrics.success_rate() == 1.0


@pytest.mark.slow
def test_failure_check_cost_bound_and_key_independence():
    from rrsim.runner import run_scenario
    from rrsim.scenario import ScenarioConfig

    per = {}
    for I in (10, 60):
        for seed in (1, 2, 3):
            cfg = ScenarioConfig().with_(**{"workload.insertions": I, "workload.lookups": 0, "duration": 1000.0,
                                            "topology.seed": seed, "seed": seed})
            marks = {}

            def setup(res, marks=marks):
                res.sim.schedule_at(40.0, lambda: marks.update(
                    check=res.metrics.kinds["gc_check"], reply=res.metrics.kinds["check_reply"]))

            res = run_scenario(cfg, setup=setup)
            intervals = (1000.0 - 40.0) / cfg.protocol.check_interval
            checks = (res.metrics.kinds["gc_check"] - marks["check"]) / intervals
            replies = (res.metrics.kinds["check_reply"] - marks["reply"]) / intervals
            bound = 100 / 4 * min(I, 4)
            periodic = checks + replies
            assert checks <= bound
            assert periodic <= bound + replies + 1e-9
            per.setdefault(I, []).append(checks)
    assert np.mean(per[60]) == pytest.approx(np.mean(per[10]), rel=0.10)


@pytest.mark.slow
def test_success_trend_over_speed_and_regions():
    from rrsim import suites
    from rrsim.runner import run_scenario

    grid = {}
    for speed in (1.0, 5.0):
        for R in (4, 9, 16, 25):
            runs = [run_scenario(suites.seeded(suites.mobility_cfg("rr", R, speed), ts, rs))
                    for ts, rs in suites.seed_pairs(2)]
            grid[speed, R] = np.mean([r.metrics.success_rate() for r in runs])
    for speed in (1.0, 5.0):
        row = [grid[speed, R] for R in (4, 9, 16, 25)]
        assert all(b <= a for a, b in zip(row, row[1:])), row
    for R in (4, 9, 16, 25):
        assert grid[5.0, R] <= grid[1.0, R]
