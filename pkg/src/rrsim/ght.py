"""Geographic hash table baseline: each key hashes to a point; the node closest
to it (home node) and the rest of the enclosing face store replicas, and the
home node refreshes them periodically."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .ops import NOT_FOUND, SUCCESS, KeyRecord, StorageProtocol
from .world import hash_key_to_point


@dataclass
class GHTConfig:
    ght_star: bool = False
    refresh_interval: float = 10.0
    refresh: bool = True
    replica_ttl_factor: float = 3.0
    retry_max: int = 3
    op_timeout: float = 1.0
    reject_long_perimeters: bool = False  # high-level mode only
    max_hash_tries: int = 16


@dataclass
class HomePerimeterRecord:
    key_id: int
    home_node: int
    perimeter_nodes: list[int]
    value: object
    last_refresh: float


@dataclass
class _Replica:
    rec: KeyRecord
    expires: float


class GHTProtocol(StorageProtocol):
    name = "ght"

    def __init__(self, net, metrics, rngs, cfg: GHTConfig | None = None):
        cfg = cfg or GHTConfig()
        super().__init__(net, metrics, rngs, cfg.retry_max, cfg.op_timeout)
        self.cfg = cfg
        if cfg.ght_star:
            self.name = "ght_star"
        self.stores: list[dict[int, _Replica]] = [dict() for _ in range(self.world.n)]
        self.home: dict[int, HomePerimeterRecord] = {}
        self._points: dict[int, tuple[float, float]] = {}
        self._timers: dict[int, object] = {}
        self.refresh_sent = 0
        self.perimeter_lengths: list[int] = []

    # -- hashing ----------------------------------------------------------
    def point_for(self, key: int) -> tuple[float, float]:
        p = self._points.get(key)
        if p is not None:
            return p
        bounds = self.world.bounds
        p = hash_key_to_point(key, bounds, self.cfg.ght_star, 0)
        if self.cfg.reject_long_perimeters:
            limit = math.sqrt(self.world.n)
            for idx in range(self.cfg.max_hash_tries):
                cand = hash_key_to_point(key, bounds, self.cfg.ght_star, idx)
                if len(self.trace_perimeter(cand)[1]) <= limit:
                    p = cand
                    break
        self._points[key] = p
        return p

    def trace_perimeter(self, point) -> tuple[int, list[int], int]:
        """Home node, home perimeter and tour length in hops for ``point``,
        by a synchronous trace started at the true closest node."""
        start = self.world.closest_node(point)
        pkt = self.net.new_packet("probe", "insertion", start, point=point)
        home, how, path = self.net.trace_route(start, pkt)
        # a ttl-bounded trace reports everything it walked, so it reads as long
        trace = list(dict.fromkeys(pkt.perimeter_trace)) if how in ("closest", "ttl") else [home]
        return home, trace or [home], len(path) - 1

    # -- operations ---------------------------------------------------------
    def _attempt(self, op) -> None:
        payload = {
            "op": op.op_id,
            "origin": op.origin,
            "origin_pos": self.world.nodes[op.origin].perceived_pos,
            "key": op.key,
        }
        if op.kind == "insert":
            payload["record"] = KeyRecord(op.key, op.value, op.origin, None, op.aggregate)
            category = "insertion"
        else:
            category = "lookup"
        pkt = self.net.new_packet(op.kind, category, op.origin, point=self.point_for(op.key), payload=payload)
        self.net.send(op.origin, pkt)

    def deliver(self, u: int, pkt, how: str) -> None:
        if how in ("ttl", "dead"):
            return
        kind = pkt.kind
        if kind in ("reply", "ins_ack"):
            if how == "arrived":
                p = pkt.payload
                self.complete(p["op"], p["status"], p.get("value"))
            return
        if how != "closest":
            return
        trace = list(dict.fromkeys(pkt.perimeter_trace)) or [u]
        if u not in trace:
            trace.insert(0, u)
        p = pkt.payload
        now = self.sim.now
        if kind == "insert":
            self._install(u, trace, p["record"], now)
            self.reply_to_origin(u, {**p, "status": SUCCESS, "record": None}, "insertion", "ins_ack")
        elif kind == "lookup":
            nodes = self.world.nodes
            found = None
            for w in trace:
                rep = self.stores[w].get(p["key"])
                if rep is not None and rep.expires >= now and nodes[w].alive:
                    found = rep.rec
                    break
            status = SUCCESS if found is not None else NOT_FOUND
            self.reply_to_origin(u, {**p, "status": status, "value": found.value if found else None},
                                 "lookup", "reply")
        elif kind == "refresh":
            self._install(u, trace, p["record"], now)

    def _install(self, home: int, trace: list[int], rec: KeyRecord, now: float) -> None:
        # without refreshes nothing would renew a replica, so it never expires
        expires = now + self.cfg.replica_ttl_factor * self.cfg.refresh_interval if self.cfg.refresh else math.inf
        for w in trace:
            if not self.world.nodes[w].alive:
                continue
            store = self.stores[w]
            old = store.get(rec.key_id)
            merged = rec if old is None else old.rec.merge(rec)
            store[rec.key_id] = _Replica(merged, expires)
        value = self.stores[home][rec.key_id].rec if rec.key_id in self.stores[home] else rec
        self.home[rec.key_id] = HomePerimeterRecord(rec.key_id, home, trace, value, now)
        self.perimeter_lengths.append(len(trace))
        if self.cfg.refresh and rec.key_id not in self._timers:
            self._timers[rec.key_id] = self.sim.schedule(self.cfg.refresh_interval, self.perimeter_refresh_tick,
                                                         rec.key_id)

    # -- refresh ------------------------------------------------------------
    def _refresher(self, key: int) -> int | None:
        hp = self.home.get(key)
        if hp is None:
            return None
        nodes = self.world.nodes
        if nodes[hp.home_node].alive and key in self.stores[hp.home_node]:
            return hp.home_node
        holders = [w for w in hp.perimeter_nodes if nodes[w].alive and key in self.stores[w]]
        return min(holders) if holders else None

    def perimeter_refresh_tick(self, key: int) -> None:
        self._timers[key] = self.sim.schedule(self.cfg.refresh_interval, self.perimeter_refresh_tick, key)
        u = self._refresher(key)
        if u is None:
            return
        rec = self.stores[u][key].rec
        pkt = self.net.new_packet("refresh", "periodic", u, point=self.point_for(key), payload={"record": rec})
        self.refresh_sent += 1
        self.net.send(u, pkt)

    # -- introspection --------------------------------------------------------
    def live_replicas(self, key: int) -> list[int]:
        now = self.sim.now
        return [w for w in range(self.world.n)
                if self.world.nodes[w].alive and key in self.stores[w] and self.stores[w][key].expires >= now]

    def storage_counts(self) -> dict[int, int]:
        now = self.sim.now
        out = {}
        for w, st in enumerate(self.stores):
            if not self.world.nodes[w].alive:
                continue
            c = sum(1 for r in st.values() if r.expires >= now)
            if c:
                out[w] = c
        return out

    def replica_counts(self) -> dict[int, int]:
        now = self.sim.now
        out: dict[int, int] = {}
        for w, st in enumerate(self.stores):
            if not self.world.nodes[w].alive:
                continue
            for k, r in st.items():
                if r.expires >= now:
                    out[k] = out.get(k, 0) + 1
        return out
