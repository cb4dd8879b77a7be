"""Build and run one scenario end to end."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .baselines import CentralizedProtocol, FloodingProtocol
from .ght import GHTConfig, GHTProtocol
from .net import NetConfig, Network
from .ops import FAILURE
from .rr import RRConfig, RRProtocol
from .scenario import ScenarioConfig, TimedOp, gen_workload
from .sim import MetricsReport, RngBank, Simulator
from .world import World, inject_failures, place_uniform, random_waypoint_step


@dataclass
class RunResult:
    config: ScenarioConfig
    metrics: MetricsReport
    protocol: object
    world: World
    net: Network
    sim: Simulator
    workload: list[TimedOp]
    runtime: float
    failures: dict[int, float] = field(default_factory=dict)

    def summary(self) -> dict:
        m = self.metrics
        n_ins = sum(1 for o in self.workload if o.kind == "insert")
        n_look = len(self.workload) - n_ins
        out = {
            "protocol": self.config.protocol.name,
            "n": self.world.n,
            "R": self.world.grid.R,
            "seed": self.config.seed,
            "success": m.success_rate(),
            "insert_success": m.insert_success_rate(),
            "insertion_msgs": m.total("insertion"),
            "election_msgs": m.total("election"),
            "lookup_msgs": m.total("lookup"),
            "periodic_msgs": m.total("periodic"),
            "mobility_msgs": m.total("mobility_update"),
            "beacon_msgs": m.total("routing_beacon"),
            "ins_per_op": (m.total("insertion", "election") / n_ins) if n_ins else 0.0,
            "lookup_per_op": (m.total("lookup") / n_look) if n_look else 0.0,
            "total_msgs": m.total("insertion", "election", "lookup", "periodic", "mobility_update"),
            "hotspot": m.hotspot("insertion", "election", "lookup"),
            "ttl_drops": m.ttl_drops,
            "runtime": self.runtime,
        }
        out.update(m.notes)
        return out


def build_world(cfg: ScenarioConfig) -> World:
    """Placement and location error draw only from the topology seed."""
    topo = RngBank(cfg.topology.seed)
    bounds = cfg.bounds()
    grid = cfg.grid_obj()
    pos = place_uniform(cfg.topology.n, bounds, topo["placement"])
    return World.build(pos, bounds, grid, cfg.dynamics.error_fraction, cfg.radio.range, topo["error"])


def build_protocol(cfg: ScenarioConfig, net: Network, metrics: MetricsReport, rngs: RngBank):
    pr = cfg.protocol
    high = cfg.mode == "high_level"
    name = pr.name
    if name == "rr":
        rc = RRConfig(s_min=pr.s_min, check_interval=pr.check_interval, retry_max=pr.retry_max,
                      cache_ttl=pr.cache_ttl, geocast=pr.geocast, hash_count=pr.hash_count,
                      op_timeout=pr.op_timeout, position_check=pr.position_check, periodic=not high,
                      mobility=cfg.dynamics.max_speed > 0, n_configured=cfg.topology.n)
        return RRProtocol(net, metrics, rngs, rc)
    if name in ("ght", "ght_star"):
        gc = GHTConfig(ght_star=name == "ght_star", refresh_interval=pr.refresh_interval, refresh=not high,
                       retry_max=pr.retry_max, op_timeout=pr.op_timeout, reject_long_perimeters=high)
        return GHTProtocol(net, metrics, rngs, gc)
    if name == "flooding":
        return FloodingProtocol(net, metrics, rngs, pr.retry_max, pr.op_timeout)
    if name == "centralized":
        return CentralizedProtocol(net, metrics, rngs, pr.retry_max, pr.op_timeout)
    raise ValueError(f"unknown protocol {name!r}")


def _alive_origin(world: World, origin: int) -> int | None:
    n = world.n
    for k in range(n):
        v = (origin + k) % n
        if world.nodes[v].alive:
            return v
    return None


def run_scenario(cfg: ScenarioConfig, workload: list[TimedOp] | None = None, setup=None) -> RunResult:
    """Run ``cfg`` to completion.

    ``setup(result)`` is called after construction and before the clock
    starts, for scripted interventions.
    """
    t0 = time.perf_counter()
    world = build_world(cfg)
    sim = Simulator()
    metrics = MetricsReport(world.n)
    rngs = RngBank(cfg.seed)
    ncfg = NetConfig(radio_range=cfg.radio.range, loss=cfg.radio.loss, ideal=cfg.mode == "high_level",
                     replanarize_interval=cfg.protocol.replanarize_interval or None)
    net = Network(sim, world, metrics, rngs, ncfg)
    proto = build_protocol(cfg, net, metrics, rngs)
    if workload is None:
        workload = gen_workload(cfg, rngs["workload"])
    res = RunResult(cfg, metrics, proto, world, net, sim, workload, 0.0)

    def issue(op: TimedOp) -> None:
        # a dead origin hands its operation to the next live node id
        origin = _alive_origin(world, op.origin)
        if origin is None:
            origin = op.origin  # everyone is dead; the op fails at once
        if op.kind == "insert":
            proto.insert(origin, op.key, op.value, aggregate=op.aggregate)
        else:
            proto.lookup(origin, op.key)

    for op in workload:
        sim.schedule_at(op.time, issue, op)

    d = cfg.dynamics
    if d.failure_fraction > 0:
        res.failures = inject_failures(world.n, d.failure_fraction, cfg.duration, rngs["failures"])

        def kill(i: int) -> None:
            world.kill(i)
            proto.on_kill(i)

        for i, t in sorted(res.failures.items()):
            sim.schedule_at(t, kill, i)

    if d.max_speed > 0:
        rng_mob = rngs["mobility"]

        def move() -> None:
            for nd in world.nodes:
                if nd.alive:
                    random_waypoint_step(nd, d.max_speed, d.pause_time, rng_mob, d.mobility_dt, world.bounds)
            world.refresh()
            sim.schedule(d.mobility_dt, move)

        sim.schedule(d.mobility_dt, move)

    net.start_beacons()
    proto.start()
    if setup is not None:
        setup(res)
    sim.run(until=cfg.duration)
    if proto.ops:
        sim.run(until=cfg.duration + (cfg.protocol.retry_max + 1) * cfg.protocol.op_timeout + 1.0)
    for op in list(proto.ops.values()):
        proto._finish(op, FAILURE)
    metrics.storage_entries = proto.storage_counts()
    if isinstance(proto, RRProtocol):
        metrics.notes["elections"] = proto.elections_started
        metrics.notes["servers"] = len(proto.servers)
    res.runtime = time.perf_counter() - t0
    return res
