"""Radio, beacon-driven neighbor tables, Gabriel-graph planarization, greedy and
face (perimeter) routing, region routing, geocast and anycast.

Connectivity is a unit disk over TRUE positions; every routing decision uses
PERCEIVED positions as advertised in beacons.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

GREEDY = 0
PERIMETER = 1
TWO_PI = 2.0 * math.pi
_EPS = 1e-9


# ---------------------------------------------------------------------------
# geometry


def dist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def segment_crossing(p1, p2, q1, q2):
    """Interior intersection point of segments p1p2 and q1q2, or None."""
    rx, ry = p2[0] - p1[0], p2[1] - p1[1]
    sx, sy = q2[0] - q1[0], q2[1] - q1[1]
    den = rx * sy - ry * sx
    if abs(den) < 1e-12:
        return None
    qpx, qpy = q1[0] - p1[0], q1[1] - p1[1]
    t = (qpx * sy - qpy * sx) / den
    u = (qpx * ry - qpy * rx) / den
    if _EPS < t < 1 - _EPS and _EPS < u < 1 - _EPS:
        return (p1[0] + t * rx, p1[1] + t * ry)
    return None


def planarize_gg(pos, neighbors: dict[int, tuple[float, float]]) -> list[int]:
    """Gabriel-graph subset of ``neighbors`` as seen from a node at ``pos``.

    Edge (u, v) survives iff no other neighbor lies strictly inside the disk
    whose diameter is uv.
    """
    if not neighbors:
        return []
    ids = list(neighbors)
    xy = np.array([neighbors[i] for i in ids], dtype=float)
    mx = (xy[:, 0] + pos[0]) * 0.5
    my = (xy[:, 1] + pos[1]) * 0.5
    r2 = ((xy[:, 0] - pos[0]) ** 2 + (xy[:, 1] - pos[1]) ** 2) * 0.25
    # d2[i, j] = squared distance of witness j from midpoint of edge i
    d2 = (xy[None, :, 0] - mx[:, None]) ** 2 + (xy[None, :, 1] - my[:, None]) ** 2
    np.fill_diagonal(d2, np.inf)
    blocked = (d2 < r2[:, None] * (1 - 1e-12)).any(axis=1)
    return [ids[i] for i in range(len(ids)) if not blocked[i]]


def ccw_next(pos, ref_angle: float, cands) -> int | None:
    """First candidate counterclockwise about ``pos`` from ``ref_angle``.

    ``cands`` is an iterable of (id, (x, y)). A candidate exactly on the
    reference ray counts as a full turn.
    """
    best, best_d = None, None
    for cid, p in cands:
        a = math.atan2(p[1] - pos[1], p[0] - pos[0])
        d = (a - ref_angle) % TWO_PI
        if d < 1e-12:
            d = TWO_PI
        if best_d is None or d < best_d:
            best, best_d = cid, d
    return best


# ---------------------------------------------------------------------------
# packets


_uid = itertools.count()


@dataclass(eq=False)
class Packet:
    kind: str
    category: str
    src: int
    dest_point: tuple[float, float]
    dest_region: int | None = None
    dest_node: int | None = None
    ttl: int = 256
    mode: int = GREEDY
    lp: tuple[float, float] | None = None
    lf: tuple[float, float] | None = None
    e0: tuple[int, int] | None = None
    prev: int | None = None
    prev_pos: tuple[float, float] | None = None
    flooder_flag: bool = False
    payload: dict[str, Any] = field(default_factory=dict)
    hops: int = 0
    perimeter_trace: list[int] = field(default_factory=list)
    hop_trace: list[int] | None = None
    uid: int = field(default_factory=lambda: next(_uid))


@dataclass
class NetConfig:
    radio_range: float = 80.0
    loss: float = 0.0
    ttl: int = 256
    beacon_interval: float = 1.0
    beacon_expiration: float = 4.5
    hop_latency: float = 0.005
    hop_jitter: float = 0.001
    ideal: bool = False  # exact tables, zero latency, no beacons
    replanarize_interval: float | None = None
    gfpg_budget_factor: float = 0.0  # 0: walk until the face closes (ttl-bounded)
    trace_hops: bool = False


@dataclass
class GeocastState:
    gid: int
    pkt: Packet
    region: int
    flavor: str
    seen: set = field(default_factory=set)
    receivers: list = field(default_factory=list)
    walks: int = 0


@dataclass
class _Walk:
    gc: GeocastState
    origin: int
    first_edge: tuple[int, int]
    budget: int
    hops: int = 0


class Network:
    """Substrate shared by every protocol in one run."""

    def __init__(self, sim, world, metrics, rngs, config: NetConfig | None = None):
        self.sim = sim
        self.world = world
        self.metrics = metrics
        self.cfg = config or NetConfig()
        self.rng_mac = rngs["mac"]
        self.rng_loss = rngs["loss"]
        self.protocol = None
        self.on_overhear = None
        n = world.n
        self.tables: list[dict[int, tuple[float, float, float]]] = [dict() for _ in range(n)]
        self._tab_ver = [0] * n
        self._planar: list[tuple | None] = [None] * n
        self._adj_key = None
        self._adj: list[np.ndarray] = []
        self._ideal_key: list[tuple | None] = [None] * n
        self._gid = itertools.count()
        self.geocasts: dict[int, GeocastState] = {}

    # -- physical layer ---------------------------------------------------
    def _adjacency(self) -> list[np.ndarray]:
        key = self.world.version
        if key != self._adj_key:
            xy = self.world.true_xy()
            tree = cKDTree(xy)
            lists = tree.query_ball_point(xy, self.cfg.radio_range)
            self._adj = [np.array(sorted(j for j in l if j != i), dtype=np.int64) for i, l in enumerate(lists)]
            self._adj_key = key
        return self._adj

    def phys_neighbors(self, u: int) -> np.ndarray:
        nb = self._adjacency()[u]
        alive = self.world.alive_mask()
        return nb[alive[nb]]

    def link_ok(self, u: int, v: int) -> bool:
        if not self.world.nodes[v].alive:
            return False
        tu, tv = self.world.nodes[u].true_pos, self.world.nodes[v].true_pos
        if dist(tu, tv) > self.cfg.radio_range:
            return False
        if self.cfg.loss > 0 and self.rng_loss.uniform01() < self.cfg.loss:
            return False
        return True

    def latency(self) -> float:
        if self.cfg.ideal:
            return 0.0
        return self.cfg.hop_latency + self.cfg.hop_jitter * self.rng_mac.uniform01()

    # -- neighbor tables --------------------------------------------------
    def start_beacons(self) -> None:
        if self.cfg.ideal:
            return
        for u in range(self.world.n):
            self.sim.schedule(self.cfg.beacon_interval * self.rng_mac.uniform01(), self.beacon_tick, u, target=u)

    def beacon_tick(self, u: int, reschedule: bool = True) -> None:
        if not self.world.nodes[u].alive:
            return
        self.metrics.count(u, "routing_beacon")
        now = self.sim.now
        px, py = self.world.nodes[u].perceived_pos
        for v in self.phys_neighbors(u):
            v = int(v)
            if self.cfg.loss > 0 and self.rng_loss.uniform01() < self.cfg.loss:
                continue
            tab = self.tables[v]
            if u not in tab:
                self._tab_ver[v] += 1
            tab[u] = (now, px, py)
        if reschedule:
            self.sim.schedule(self.cfg.beacon_interval, self.beacon_tick, u, target=u)

    def table(self, u: int) -> dict[int, tuple[float, float, float]]:
        """Fresh neighbor entries of u: id -> (last_heard, x, y)."""
        if self.cfg.ideal:
            key = (self.world.version, self.world.alive_version)
            if self._ideal_key[u] != key:
                nodes = self.world.nodes
                self.tables[u] = {int(v): (math.inf, *nodes[v].perceived_pos) for v in self.phys_neighbors(u)}
                self._ideal_key[u] = key
                self._tab_ver[u] += 1
            return self.tables[u]
        tab = self.tables[u]
        cutoff = self.sim.now - self.cfg.beacon_expiration
        stale = [v for v, e in tab.items() if e[0] < cutoff]
        if stale:
            for v in stale:
                del tab[v]
            self._tab_ver[u] += 1
        return tab

    def drop_neighbor(self, u: int, v: int) -> None:
        if v in self.tables[u]:
            del self.tables[u][v]
            self._tab_ver[u] += 1

    def planar_neighbors(self, u: int) -> list[tuple[int, tuple[float, float]]]:
        """GG-planarized neighbor list with current advertised positions."""
        tab = self.table(u)
        cached = self._planar[u]
        now = self.sim.now
        ri = self.cfg.replanarize_interval
        if (
            cached is None
            or cached[0] != self._tab_ver[u]
            or (ri is not None and now - cached[1] >= ri)
        ):
            ids = planarize_gg(self.world.nodes[u].perceived_pos, {v: (e[1], e[2]) for v, e in tab.items()})
            cached = (self._tab_ver[u], now, ids)
            self._planar[u] = cached
        return [(v, (tab[v][1], tab[v][2])) for v in cached[2] if v in tab]

    # -- routing decisions ------------------------------------------------
    def arrived(self, u: int, pkt: Packet) -> bool:
        if pkt.dest_node is not None:
            return u == pkt.dest_node
        if pkt.dest_region is not None:
            return self.world.nodes[u].current_region == pkt.dest_region
        return False

    def greedy_forward(self, u: int, dest) -> int | None:
        """Neighbor strictly closer to ``dest`` than u, or None at a dead end."""
        pu = self.world.nodes[u].perceived_pos
        best, best_d = None, dist(pu, dest)
        for v, e in self.table(u).items():
            d = math.hypot(e[1] - dest[0], e[2] - dest[1])
            if d < best_d:
                best, best_d = v, d
        return best

    def _enter_perimeter(self, u: int, pkt: Packet) -> int | None:
        pu = self.world.nodes[u].perceived_pos
        D = pkt.dest_point
        pkt.mode = PERIMETER
        pkt.lp = pu
        pkt.lf = pu
        pkt.perimeter_trace = [u]
        cands = self.planar_neighbors(u)
        v = ccw_next(pu, math.atan2(D[1] - pu[1], D[0] - pu[0]), cands)
        if v is None:
            pkt.e0 = None
            return None
        pkt.e0 = (u, v)
        return self._face_change(u, v, pkt, cands)

    def _face_change(self, u: int, v: int, pkt: Packet, cands) -> int:
        pu = self.world.nodes[u].perceived_pos
        D = pkt.dest_point
        pos = dict(cands)
        for _ in range(len(cands) + 1):
            cross = segment_crossing(pu, pos[v], pkt.lf, D)
            if cross is None or dist(cross, D) >= dist(pkt.lf, D) - 1e-9:
                break
            pkt.lf = cross
            pv = pos[v]
            v = ccw_next(pu, math.atan2(pv[1] - pu[1], pv[0] - pu[0]), cands)
            pkt.e0 = (u, v)
            pkt.perimeter_trace = [u]
        return v

    def face_forward(self, u: int, pkt: Packet) -> int | None:
        """Right-hand-rule step at u; None once the face tour closes."""
        pu = self.world.nodes[u].perceived_pos
        cands = self.planar_neighbors(u)
        if not cands:
            return None
        ref = pkt.prev_pos
        if pkt.prev in self.tables[u]:
            e = self.tables[u][pkt.prev]
            ref = (e[1], e[2])
        if ref is None:
            return self._enter_perimeter(u, pkt)
        v = ccw_next(pu, math.atan2(ref[1] - pu[1], ref[0] - pu[0]), cands)
        v = self._face_change(u, v, pkt, cands)
        if pkt.e0 == (u, v):
            return None
        return v

    def route_step(self, u: int, pkt: Packet, fresh: bool = True) -> int | None:
        """Choose the next hop at u (mutates routing state in ``pkt``)."""
        D = pkt.dest_point
        if pkt.dest_node is not None and pkt.dest_node in self.table(u):
            return pkt.dest_node
        pu = self.world.nodes[u].perceived_pos
        if pkt.mode == PERIMETER and dist(pu, D) < dist(pkt.lp, D):
            pkt.mode = GREEDY
        if pkt.mode == GREEDY:
            v = self.greedy_forward(u, D)
            if v is not None:
                return v
            return self._enter_perimeter(u, pkt)
        if fresh:
            pkt.perimeter_trace.append(u)
        elif pkt.perimeter_trace == [u] and pkt.e0 is not None and pkt.e0[0] == u:
            return self._enter_perimeter(u, pkt)
        return self.face_forward(u, pkt)

    # -- event-driven forwarding -----------------------------------------
    def new_packet(self, kind: str, category: str, src: int, *, point=None, region=None, node=None,
                   payload=None) -> Packet:
        if region is not None:
            point = self.world.grid.center(region)
        elif node is not None and point is None:
            point = self.world.nodes[node].perceived_pos
        pkt = Packet(kind, category, src, point, dest_region=region, dest_node=node,
                     ttl=self.cfg.ttl, payload=payload or {})
        if self.cfg.trace_hops:
            pkt.hop_trace = []
        return pkt

    def send(self, src: int, pkt: Packet) -> None:
        """Inject a routed packet at ``src`` (processed at the current time)."""
        self.sim.schedule(0.0, self._process, src, pkt, True, target=src)

    def route_to_region(self, src: int, pkt: Packet) -> None:
        self.send(src, pkt)

    def _process(self, u: int, pkt: Packet, fresh: bool) -> None:
        if not self.world.nodes[u].alive:
            self._deliver(u, pkt, "dead")
            return
        if self.arrived(u, pkt):
            if pkt.dest_region is not None and not pkt.flooder_flag:
                pkt.flooder_flag = True
            self._deliver(u, pkt, "arrived")
            return
        v = self.route_step(u, pkt, fresh)
        if v is None:
            self._deliver(u, pkt, "closest")
            return
        self._transmit(u, v, pkt)

    def _transmit(self, u: int, v: int, pkt: Packet) -> None:
        if pkt.ttl <= 0:
            self.metrics.ttl_drops += 1
            self._deliver(u, pkt, "ttl")
            return
        pkt.ttl -= 1
        pkt.hops += 1
        self.metrics.count(u, pkt.category)
        self.metrics.kinds[pkt.kind] += 1
        if pkt.hop_trace is not None:
            pkt.hop_trace.append(u)
        if self.on_overhear is not None and "overhear" in pkt.payload:
            self.on_overhear(u, pkt)
        delay = self.latency()
        if self.link_ok(u, v):
            pkt.prev = u
            pkt.prev_pos = self.world.nodes[u].perceived_pos
            self.sim.schedule(delay, self._process, v, pkt, True, target=v)
        else:
            self.drop_neighbor(u, v)
            self.sim.schedule(delay, self._process, u, pkt, False, target=u)

    def _deliver(self, u: int, pkt: Packet, how: str) -> None:
        if self.protocol is not None:
            self.protocol.deliver(u, pkt, how)

    # -- synchronous tracing (oracles, dry runs, calibration) ----------------
    def trace_route(self, src: int, pkt: Packet, max_hops: int | None = None) -> tuple[int, str, list[int]]:
        """Follow ``pkt`` hop by hop without the event loop or link failures."""
        path = [src]
        u = src
        limit = pkt.ttl if max_hops is None else max_hops
        fresh = True
        for _ in range(limit + 1):
            if self.arrived(u, pkt):
                return u, "arrived", path
            v = self.route_step(u, pkt, fresh)
            if v is None:
                return u, "closest", path
            if len(path) > limit:
                return u, "ttl", path
            pkt.prev = u
            pkt.prev_pos = self.world.nodes[u].perceived_pos
            u = v
            path.append(u)
        return u, "ttl", path

    # -- geocast ----------------------------------------------------------
    def geocast(self, flooder: int, pkt: Packet, region: int, flavor: str = "flood") -> GeocastState:
        """Deliver ``pkt`` to region members starting at ``flooder``."""
        st = GeocastState(next(self._gid), pkt, region, flavor)
        self.geocasts[st.gid] = st
        self.sim.schedule(0.0, self._gc_receive, flooder, st, target=flooder)
        self.sim.schedule(30.0, self.geocasts.pop, st.gid, None)
        return st

    def geocast_flood(self, flooder: int, pkt: Packet, region: int) -> GeocastState:
        return self.geocast(flooder, pkt, region, "flood")

    def geocast_gfpg(self, flooder: int, pkt: Packet, region: int) -> GeocastState:
        return self.geocast(flooder, pkt, region, "gfpg")

    def _gc_receive(self, v: int, st: GeocastState) -> None:
        if v in st.seen or not self.world.nodes[v].alive:
            return
        if self.world.nodes[v].current_region != st.region:
            return
        st.seen.add(v)
        st.receivers.append(v)
        if self.protocol is not None:
            self.protocol.on_geocast(v, st.pkt)
        self.sim.schedule(self.latency() * 0.5, self._gc_broadcast, v, st, target=v)

    def _gc_broadcast(self, u: int, st: GeocastState) -> None:
        if not self.world.nodes[u].alive:
            return
        self.metrics.count(u, st.pkt.category)
        self.metrics.kinds[st.pkt.kind] += 1
        delay = self.latency()
        loss = self.cfg.loss
        for v in self.phys_neighbors(u):
            v = int(v)
            if v in st.seen:
                continue
            if loss > 0 and self.rng_loss.uniform01() < loss:
                continue
            self.sim.schedule(delay, self._gc_receive, v, st, target=v)
        if st.flavor == "gfpg":
            self._gfpg_border(u, st)

    def _gfpg_budget(self, region: int) -> int:
        if self.cfg.gfpg_budget_factor <= 0:
            return self.cfg.ttl
        g = self.world.grid
        return max(1, math.ceil(self.cfg.gfpg_budget_factor * g.perimeter(region) / self.cfg.radio_range))

    def _gfpg_border(self, u: int, st: GeocastState) -> None:
        nodes = self.world.nodes
        for o, _ in self.planar_neighbors(u):
            if nodes[o].current_region != st.region:
                walk = _Walk(st, u, (u, o), self._gfpg_budget(st.region))
                st.walks += 1
                self._walk_send(u, o, walk)

    def _walk_send(self, u: int, v: int, walk: _Walk) -> None:
        self.metrics.count(u, walk.gc.pkt.category)
        self.metrics.kinds[walk.gc.pkt.kind + ":walk"] += 1
        walk.hops += 1
        if self.link_ok(u, v):
            self.sim.schedule(self.latency(), self._walk_recv, v, u, walk, target=v)
        else:
            self.drop_neighbor(u, v)

    def _walk_recv(self, w: int, prev: int, walk: _Walk) -> None:
        nodes = self.world.nodes
        if not nodes[w].alive:
            return
        st = walk.gc
        if nodes[w].current_region == st.region:
            if w not in st.seen:
                self._gc_receive(w, st)
            return
        if walk.hops >= walk.budget:
            return
        pw = nodes[w].perceived_pos
        cands = self.planar_neighbors(w)
        if not cands:
            return
        tab = self.tables[w]
        ref = (tab[prev][1], tab[prev][2]) if prev in tab else nodes[prev].perceived_pos
        nxt = ccw_next(pw, math.atan2(ref[1] - pw[1], ref[0] - pw[0]), cands)
        if nxt is None or (w, nxt) == walk.first_edge:
            return
        self._walk_send(w, nxt, walk)

    # -- anycast ----------------------------------------------------------
    def anycast_to_server(self, src: int, pkt: Packet, cached_servers) -> bool:
        """Unicast ``pkt`` toward the first entry of ``cached_servers``.

        ``cached_servers`` is a sequence of (server_id, position); callers
        order it by preference. Returns False (a MISS) when it is empty.
        """
        if not cached_servers:
            return False
        server, pos = cached_servers[0]
        pkt.dest_node = server
        pkt.dest_point = pos
        pkt.dest_region = None
        self.send(src, pkt)
        return True
