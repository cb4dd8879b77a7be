"""Rendezvous Regions: keys hash to grid regions and are replicated on a few
elected in-region servers.

Insertions reach the first in-region node (the flooder), which geocasts them to
the region's servers and runs an on-demand election when fewer than ``s_min``
servers acknowledge. Lookups are anycast to a cached server, falling back to a
region geocast.
"""

from __future__ import annotations

import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass, field

from .ops import FAILURE, NOT_FOUND, SUCCESS, KeyRecord, StorageProtocol, store_record
from .world import hash_key_to_region, label_hash, mix64

DEFAULT_WKK = 0x5EED_B007_0000_0001


@dataclass
class RRConfig:
    s_min: int = 3
    check_interval: float = 20.0
    retry_max: int = 3
    cache_ttl: float = 30.0
    geocast: str = "flood"  # "flood" | "gfpg"
    hash_count: int = 1
    op_timeout: float = 1.0
    position_check: float = 1.0
    check_jitter: float = 10.0  # wide enough that two servers rarely fire within one flood time
    periodic: bool = True  # failure checks (off in high-level runs)
    mobility: bool = False  # arm position checks
    n_configured: int | None = None
    wkk: int = DEFAULT_WKK


@dataclass
class ServerState:
    region: int
    store: dict[int, KeyRecord] = field(default_factory=dict)
    failure_timer: object = None
    position_timer: object = None
    is_server: bool = True


@dataclass
class ElectionRound:
    flooder: int
    region: int
    p: float = 0.0
    acks: set = field(default_factory=set)
    round: int = 0


class ServerCache:
    """Most-recent-first server locations per region with TTL and LRU capacity."""

    def __init__(self, capacity: int, ttl: float):
        self.capacity = capacity
        self.ttl = ttl
        self._regions: dict[int, OrderedDict] = {}

    def add(self, region: int, server: int, pos, now: float) -> None:
        od = self._regions.setdefault(region, OrderedDict())
        od.pop(server, None)
        od[server] = (now, pos)
        while len(od) > self.capacity:
            od.popitem(last=False)

    def get(self, region: int, now: float) -> list[tuple[int, tuple[float, float]]]:
        od = self._regions.get(region)
        if not od:
            return []
        for s in [s for s, (t, _) in od.items() if now - t > self.ttl]:
            del od[s]
        return [(s, pos) for s, (t, pos) in reversed(od.items())]

    def evict(self, region: int, server: int) -> None:
        od = self._regions.get(region)
        if od:
            od.pop(server, None)


@dataclass(eq=False)
class _Session:
    sid: int
    kind: str  # insert | lookup | check | mobility | proxy
    flooder: int
    region: int
    category: str
    payload: dict
    records: list = field(default_factory=list)
    election: ElectionRound | None = None
    known: dict = field(default_factory=dict)  # server id -> pos
    answered: bool = False
    timer: object = None
    rounds_used: int = 0


def bootstrap_key(service_class: str, wkk: int = DEFAULT_WKK) -> int:
    return mix64(wkk ^ label_hash(service_class))


class RRProtocol(StorageProtocol):
    name = "rr"

    def __init__(self, net, metrics, rngs, cfg: RRConfig | None = None):
        cfg = cfg or RRConfig()
        super().__init__(net, metrics, rngs, cfg.retry_max, cfg.op_timeout)
        self.cfg = cfg
        self.rng = rngs["election"]
        self.rng_timer = rngs["timers"]
        self.rng_anycast = rngs["anycast"]
        self.servers: dict[int, ServerState] = {}
        self.caches: dict[int, ServerCache] = {}
        self.sessions: dict[int, _Session] = {}
        self._sid = itertools.count()
        self.pending_transfers: dict[int, dict] = {}
        self.election_rounds: list[int] = []
        self.elections_started = 0
        self.deferred_sessions = 0
        self._election_heard: dict[tuple[int, int], float] = {}  # (node, region) -> busy until
        self._electing: dict[tuple[int, int], float] = {}  # same, election rounds only
        grid = self.world.grid
        n_cfg = cfg.n_configured or self.world.n
        self.p0 = min(1.0, 2.0 * cfg.s_min * grid.R / max(1, n_cfg))
        net.on_overhear = self._overhear

    # -- timing helpers ---------------------------------------------------
    def round_timeout(self, region: int) -> float:
        ncfg = self.net.cfg
        hops = math.ceil(self.world.grid.diameter(region) / (0.5 * ncfg.radio_range))
        per_hop = ncfg.hop_latency + ncfg.hop_jitter
        return max(0.05, 2.0 * hops * per_hop)

    def max_election_rounds(self) -> int:
        return math.ceil(math.log2(1.0 / self.p0)) + 1 if self.p0 < 1 else 1

    def cache(self, u: int) -> ServerCache:
        c = self.caches.get(u)
        if c is None:
            c = self.caches[u] = ServerCache(self.cfg.s_min, self.cfg.cache_ttl)
        return c

    def is_server(self, u: int, region: int) -> bool:
        st = self.servers.get(u)
        return st is not None and st.region == region and self.world.nodes[u].alive

    # -- operations ---------------------------------------------------------
    def region_for(self, op, attempt_index: int = 0) -> int:
        if op.region is not None:
            return op.region
        idx = attempt_index % max(1, self.cfg.hash_count)
        return hash_key_to_region(op.key, self.world.grid, idx)

    def _attempt(self, op) -> None:
        origin = op.origin
        base = {
            "op": op.op_id,
            "origin": origin,
            "origin_pos": self.world.nodes[origin].perceived_pos,
            "key": op.key,
        }
        if op.kind == "insert":
            regions = [op.region] if op.region is not None else [
                hash_key_to_region(op.key, self.world.grid, i) for i in range(max(1, self.cfg.hash_count))
            ]
            for region in dict.fromkeys(regions):
                rec = KeyRecord(op.key, op.value, origin, region, op.aggregate)
                pkt = self.net.new_packet("insert", "insertion", origin, region=region,
                                          payload={**base, "records": [rec], "target": region})
                self.net.route_to_region(origin, pkt)
        else:
            region = self.region_for(op, op.attempts - 1)
            pkt = self.net.new_packet("lookup", "lookup", origin, region=region, payload={**base, "target": region})
            self.net.route_to_region(origin, pkt)

    def publish(self, origin: int, service_class: str, descriptor, callback=None):
        region = hash_key_to_region(self.cfg.wkk, self.world.grid)
        return self.insert(origin, bootstrap_key(service_class, self.cfg.wkk), descriptor, region=region, callback=callback)

    def resolve(self, origin: int, service_class: str, callback=None):
        region = hash_key_to_region(self.cfg.wkk, self.world.grid)
        return self.lookup(origin, bootstrap_key(service_class, self.cfg.wkk), region=region, callback=callback)

    # -- packet delivery ----------------------------------------------------
    def deliver(self, u: int, pkt, how: str) -> None:
        kind = pkt.kind
        if how in ("ttl", "dead"):
            return
        if pkt.dest_region is not None:
            # region-addressed: arrival at the flooder, or empty-region fallback
            if how == "arrived":
                region = pkt.dest_region
            else:
                region = self.world.nodes[u].current_region
                if kind == "proxy_probe" and region == pkt.payload["proxy_region"]:
                    return  # still the closest region; keep the proxy
            handler = getattr(self, "_flooder_" + kind)
            handler(u, region, pkt)
            return
        if how != "arrived":
            if kind == "anycast":
                return  # flooder's anycast timer handles it
            return
        getattr(self, "_on_" + kind)(u, pkt)

    # flooder-side entry points ------------------------------------------
    def _flooder_insert(self, u, region, pkt) -> None:
        self._start_insert_session(u, region, "insert", pkt.category, pkt.payload, pkt.payload["records"])

    def _flooder_mobility(self, u, region, pkt) -> None:
        self._start_insert_session(u, region, "mobility", "mobility_update", pkt.payload, pkt.payload["records"])

    def _flooder_proxy_probe(self, u, region, pkt) -> None:
        self._start_insert_session(u, region, "proxy", "periodic", pkt.payload, pkt.payload["records"])

    def _start_insert_session(self, u, region, kind, category, payload, records) -> None:
        busy = self._election_heard.get((u, region), 0.0)
        if busy > self.sim.now and not self.is_server(u, region) and not self.cache(u).get(region, self.sim.now):
            # an election overheard in this region is still running: wait for
            # its servers instead of electing a second set
            self.deferred_sessions += 1
            self.sim.schedule_at(busy, self._start_insert_session, u, region, kind, category, payload, records)
            return
        sess = _Session(next(self._sid), kind, u, region, category, payload, list(records))
        sess.election = ElectionRound(u, region)
        self.sessions[sess.sid] = sess
        self._geocast_insert_round(sess)

    def _geocast_insert_round(self, sess: _Session) -> None:
        el = sess.election
        category = sess.category if el.round == 0 else "election"
        u = sess.flooder
        payload = {
            "sid": sess.sid,
            "records": sess.records if el.round == 0 or sess.kind != "check" else [],
            "p": el.p,
            "known": list(sess.known.items()),
            "flooder": u,
            "flooder_pos": self.world.nodes[u].perceived_pos,
            "region": sess.region,
        }
        pkt = self.net.new_packet("gc_insert", category, u, region=sess.region, payload=payload)
        self._note_election(u, sess.region, el.p)
        self.net.geocast(u, pkt, sess.region, self.cfg.geocast)
        sess.rounds_used += 1
        sess.timer = self.sim.schedule(self.round_timeout(sess.region), self._round_done, sess)

    def _round_done(self, sess: _Session) -> None:
        el = sess.election
        if not self.world.nodes[sess.flooder].alive:
            self.sessions.pop(sess.sid, None)
            return
        if len(el.acks) >= self.cfg.s_min or el.p >= 1.0:
            self._finish_insert_session(sess)
            return
        if el.round == 0:
            wait = self._electing.get((sess.flooder, sess.region), 0.0)
            if wait > self.sim.now and sess.rounds_used < 4:
                # someone else is electing here; ask again once it is done
                sess.timer = self.sim.schedule_at(wait, self._geocast_insert_round, sess)
                return
            self.elections_started += 1
        el.p = self.p0 if el.p == 0 else min(1.0, 2.0 * el.p)
        el.round += 1
        self._geocast_insert_round(sess)

    def _finish_insert_session(self, sess: _Session) -> None:
        self.sessions.pop(sess.sid, None)
        if sess.election.round > 0:
            self.election_rounds.append(sess.election.round)
        if not sess.election.acks:
            return
        u = sess.flooder
        p = sess.payload
        if sess.kind == "insert":
            self.reply_to_origin(u, {"op": p["op"], "origin": p["origin"], "origin_pos": p["origin_pos"],
                                     "status": SUCCESS}, sess.category, "ins_ack")
        elif sess.kind in ("mobility", "proxy"):
            sender = p["sender"]
            ack = {"tid": p["tid"], "proxy_region": p.get("proxy_region")}
            if sender == u:
                self._transfer_acked(u, ack)
            else:
                pkt = self.net.new_packet("transfer_ack", sess.category, u, node=sender, point=p["sender_pos"],
                                          payload=ack)
                self.net.send(u, pkt)

    def _flooder_lookup(self, u, region, pkt) -> None:
        p = pkt.payload
        st = self.servers.get(u)
        if st is not None and st.region == region and p["key"] in st.store:
            self._answer(u, p, st.store[p["key"]].value)
            return
        sess = _Session(next(self._sid), "lookup", u, region, "lookup", p)
        self.sessions[sess.sid] = sess
        self._try_anycast(sess)

    def _try_anycast(self, sess: _Session) -> None:
        u = sess.flooder
        cands = [c for c in self.cache(u).get(sess.region, self.sim.now) if c[0] != u]
        if not cands:
            self._geocast_lookup(sess)
            return
        # spread lookups over the region's servers
        pick = self.rng_anycast.uniform_int(len(cands))
        cands.insert(0, cands.pop(pick))
        pkt = self.net.new_packet("anycast", "lookup", u, node=cands[0][0], point=cands[0][1], payload={
            "sid": sess.sid, "key": sess.payload["key"], "flooder": u,
            "flooder_pos": self.world.nodes[u].perceived_pos, "region": sess.region})
        self.net.anycast_to_server(u, pkt, cands)
        sess.known = {cands[0][0]: cands[0][1]}
        sess.timer = self.sim.schedule(2 * self.round_timeout(sess.region), self._anycast_timeout, sess, cands[0][0])

    def _anycast_timeout(self, sess: _Session, server: int) -> None:
        if sess.answered or sess.sid not in self.sessions or sess.kind != "lookup":
            return
        self.cache(sess.flooder).evict(sess.region, server)
        self._geocast_lookup(sess)

    def _geocast_lookup(self, sess: _Session) -> None:
        self.sim.cancel(sess.timer)
        sess.kind = "lookup_gc"
        u = sess.flooder
        pkt = self.net.new_packet("gc_lookup", "lookup", u, region=sess.region, payload={
            "sid": sess.sid, "key": sess.payload["key"], "flooder": u,
            "flooder_pos": self.world.nodes[u].perceived_pos, "region": sess.region})
        self.net.geocast(u, pkt, sess.region, self.cfg.geocast)
        sess.timer = self.sim.schedule(self.round_timeout(sess.region), self._lookup_round_done, sess)

    def _lookup_round_done(self, sess: _Session) -> None:
        self.sessions.pop(sess.sid, None)
        if sess.answered or not self.world.nodes[sess.flooder].alive:
            return
        self._answer(sess.flooder, sess.payload, None, NOT_FOUND)

    def _answer(self, u, p, value, status=SUCCESS) -> None:
        self.reply_to_origin(u, {"op": p["op"], "origin": p["origin"], "origin_pos": p["origin_pos"],
                                 "status": status, "value": value}, "lookup", "reply")

    # geocast receptions --------------------------------------------------
    def on_geocast(self, v: int, pkt) -> None:
        getattr(self, "_gc_" + pkt.kind)(v, pkt)

    def _note_election(self, v: int, region: int, p: float) -> None:
        # an insertion round may turn into an election; an election round
        # may be followed by another
        until = self.sim.now + (2.0 if p > 0 else 1.0) * self.round_timeout(region)
        if until > self._election_heard.get((v, region), 0.0):
            self._election_heard[(v, region)] = until
        if p > 0 and until > self._electing.get((v, region), 0.0):
            self._electing[(v, region)] = until

    def _gc_gc_insert(self, v, pkt) -> None:
        p = pkt.payload
        region = p["region"]
        self._note_election(v, region, p["p"])
        st = self.servers.get(v)
        new = False
        if st is not None and st.region != region:
            return  # left its region; position check will hand over
        if st is None:
            if p["p"] <= 0 or self.rng.uniform01() >= p["p"]:
                return
            st = self._become_server(v, region)
            new = True
        for rec in p["records"]:
            store_record(st.store, rec)
        self._arm_failure_timer(v)
        if new and p["known"]:
            src, pos = next(((s, pos) for s, pos in p["known"] if s != v), (None, None))
            if src is not None:
                pull = self.net.new_packet("pull", "election", v, node=src, point=pos, payload={
                    "requester": v, "requester_pos": self.world.nodes[v].perceived_pos, "region": region})
                self.net.send(v, pull)
        self._server_send(v, p["flooder"], p["flooder_pos"], "srv_ack", pkt.category, {"sid": p["sid"], "new": new})

    def _gc_gc_lookup(self, v, pkt) -> None:
        p = pkt.payload
        if not self.is_server(v, p["region"]):
            return
        rec = self.servers[v].store.get(p["key"])
        if rec is None:
            return
        self._server_send(v, p["flooder"], p["flooder_pos"], "srv_reply", "lookup",
                          {"sid": p["sid"], "value": rec.value})

    def _gc_gc_check(self, v, pkt) -> None:
        p = pkt.payload
        if v == p["checker"] or not self.is_server(v, p["region"]):
            return
        self._arm_failure_timer(v)
        self._server_send(v, p["checker"], p["checker_pos"], "check_reply", "periodic", {"sid": p["sid"]})

    def _gc_gc_drop_proxy(self, v, pkt) -> None:
        st = self.servers.get(v)
        if st is None:
            return
        if st.region != pkt.payload["proxy_region"]:
            return
        for k in [k for k, r in st.store.items() if r.region == pkt.payload["moved_region"]]:
            del st.store[k]

    def _server_send(self, v, dest, dest_pos, kind, category, extra) -> None:
        region = self.servers[v].region
        payload = {**extra, "server": v, "server_pos": self.world.nodes[v].perceived_pos, "region": region,
                   "overhear": True}
        if v == dest:
            getattr(self, "_on_" + kind)(v, _Local(payload))
            return
        pkt = self.net.new_packet(kind, category, v, node=dest, point=dest_pos, payload=payload)
        self.net.send(v, pkt)

    # unicast arrivals ------------------------------------------------------
    def _on_srv_ack(self, u, pkt) -> None:
        p = pkt.payload
        self.cache(u).add(p["region"], p["server"], p["server_pos"], self.sim.now)
        sess = self.sessions.get(p["sid"])
        if sess is None or sess.election is None:
            return
        sess.election.acks.add(p["server"])
        sess.known[p["server"]] = p["server_pos"]

    def _on_srv_reply(self, u, pkt) -> None:
        p = pkt.payload
        self.cache(u).add(p["region"], p["server"], p["server_pos"], self.sim.now)
        sess = self.sessions.get(p["sid"])
        if sess is None or sess.answered:
            return
        sess.answered = True
        self.sim.cancel(sess.timer)
        self.sessions.pop(sess.sid, None)
        self._answer(u, sess.payload, p["value"])

    def _on_check_reply(self, u, pkt) -> None:
        p = pkt.payload
        self.cache(u).add(p["region"], p["server"], p["server_pos"], self.sim.now)
        sess = self.sessions.get(p["sid"])
        if sess is not None:
            sess.known[p["server"]] = p["server_pos"]

    def _on_anycast(self, v, pkt) -> None:
        p = pkt.payload
        if self.is_server(v, p["region"]) and p["key"] in self.servers[v].store:
            self._server_send(v, p["flooder"], p["flooder_pos"], "srv_reply", "lookup",
                              {"sid": p["sid"], "value": self.servers[v].store[p["key"]].value})
            return
        miss = self.net.new_packet("miss", "lookup", v, node=p["flooder"], point=p["flooder_pos"],
                                   payload={"sid": p["sid"], "node": v, "region": p["region"],
                                            "was_server": self.is_server(v, p["region"])})
        self.net.send(v, miss)

    def _on_miss(self, u, pkt) -> None:
        p = pkt.payload
        if not p["was_server"]:
            self.cache(u).evict(p["region"], p["node"])
        sess = self.sessions.get(p["sid"])
        if sess is None or sess.answered or sess.kind != "lookup":
            return
        self._geocast_lookup(sess)

    def _on_reply(self, u, pkt) -> None:
        p = pkt.payload
        self.complete(p["op"], p["status"], p.get("value"))

    _on_ins_ack = _on_reply

    def _on_pull(self, s, pkt) -> None:
        p = pkt.payload
        if not self.is_server(s, p["region"]):
            return
        records = list(self.servers[s].store.values())
        out = self.net.new_packet("pull_reply", "election", s, node=p["requester"], point=p["requester_pos"],
                                  payload={"records": records, "region": p["region"]})
        self.net.send(s, out)

    def _on_pull_reply(self, v, pkt) -> None:
        p = pkt.payload
        if not self.is_server(v, p["region"]):
            return
        st = self.servers[v]
        for rec in p["records"]:
            if rec.key_id not in st.store:
                st.store[rec.key_id] = rec

    def _on_transfer_ack(self, u, pkt) -> None:
        self._transfer_acked(u, pkt.payload)

    # -- servers: election state, failure checks, mobility --------------------
    def _become_server(self, v: int, region: int) -> ServerState:
        st = ServerState(region)
        self.servers[v] = st
        if self.cfg.mobility:
            st.position_timer = self.sim.schedule(self.cfg.position_check, self._position_check, v, target=v)
        return st

    def _arm_failure_timer(self, v: int) -> None:
        if not self.cfg.periodic:
            return
        st = self.servers[v]
        self.sim.cancel(st.failure_timer)
        delay = self.cfg.check_interval + self.cfg.check_jitter * self.rng_timer.uniform01()
        st.failure_timer = self.sim.schedule(delay, self.failure_check_tick, v, target=v)

    def failure_check_tick(self, v: int) -> None:
        st = self.servers.get(v)
        if st is None or not self.world.nodes[v].alive:
            return
        self._arm_failure_timer(v)
        sess = _Session(next(self._sid), "check", v, st.region, "periodic", {})
        sess.known = {v: self.world.nodes[v].perceived_pos}
        self.sessions[sess.sid] = sess
        pkt = self.net.new_packet("gc_check", "periodic", v, region=st.region, payload={
            "sid": sess.sid, "checker": v, "checker_pos": self.world.nodes[v].perceived_pos, "region": st.region})
        self.net.geocast(v, pkt, st.region, self.cfg.geocast)
        sess.timer = self.sim.schedule(self.round_timeout(st.region), self._check_done, sess)
        self._probe_proxies(v)

    def _check_done(self, sess: _Session) -> None:
        self.sessions.pop(sess.sid, None)
        v = sess.flooder
        if not self.is_server(v, sess.region):
            return
        if len(sess.known) >= self.cfg.s_min:
            return
        # promote new servers; they pull keys from the known ones
        el = ElectionRound(v, sess.region, p=0.0, acks=set(sess.known))
        el.round = 0
        esess = _Session(next(self._sid), "check", v, sess.region, "election", {}, [])
        esess.election = el
        esess.known = dict(sess.known)
        self.sessions[esess.sid] = esess
        self.elections_started += 1
        el.p = self.p0
        el.round = 1
        self._geocast_insert_round(esess)

    def _position_check(self, v: int) -> None:
        st = self.servers.get(v)
        if st is None or not self.world.nodes[v].alive:
            return
        if self.world.nodes[v].current_region == st.region:
            st.position_timer = self.sim.schedule(self.cfg.position_check, self._position_check, v, target=v)
            return
        self.on_position_exit(v)

    def on_position_exit(self, v: int) -> None:
        """Server v left its region: hand its keys back and step down."""
        st = self.servers.pop(v)
        self.sim.cancel(st.failure_timer)
        self.sim.cancel(st.position_timer)
        by_region: dict[int, list] = {}
        for rec in st.store.values():
            by_region.setdefault(st.region, []).append(rec)
        for region, records in by_region.items():
            self._send_transfer(v, "mobility", region, records, {})

    def _send_transfer(self, v, kind, region, records, extra) -> None:
        tid = next(self._sid)
        category = "mobility_update" if kind == "mobility" else "periodic"
        tr = {"tid": tid, "kind": kind, "region": region, "records": records, "extra": extra,
              "attempts": 0, "sender": v, "category": category}
        self.pending_transfers[tid] = tr
        self._transfer_attempt(tr)

    def _transfer_attempt(self, tr: dict) -> None:
        v = tr["sender"]
        if tr["tid"] not in self.pending_transfers or not self.world.nodes[v].alive:
            self.pending_transfers.pop(tr["tid"], None)
            return
        if tr["attempts"] > self.retry_max:
            self.pending_transfers.pop(tr["tid"], None)
            return
        tr["attempts"] += 1
        payload = {"tid": tr["tid"], "records": tr["records"], "sender": v,
                   "sender_pos": self.world.nodes[v].perceived_pos, **tr["extra"]}
        pkt = self.net.new_packet(tr["kind"] if tr["kind"] == "mobility" else "proxy_probe", tr["category"], v,
                                  region=tr["region"], payload=payload)
        self.net.route_to_region(v, pkt)
        self.sim.schedule(self.op_timeout, self._transfer_attempt, tr)

    def _transfer_acked(self, u, ack) -> None:
        tr = self.pending_transfers.pop(ack["tid"], None)
        if tr is None or tr["kind"] != "proxy":
            return
        # proxy records moved: drop them from this region's servers
        v = tr["sender"]
        st = self.servers.get(v)
        if st is None or not self.world.nodes[v].alive:
            return
        proxy_region = ack["proxy_region"]
        pkt = self.net.new_packet("gc_drop_proxy", "periodic", v, region=st.region,
                                  payload={"proxy_region": proxy_region, "moved_region": tr["region"]})
        self.net.geocast(v, pkt, st.region, self.cfg.geocast)

    # -- empty-region proxies ---------------------------------------------
    def _probe_proxies(self, v: int) -> None:
        st = self.servers[v]
        groups: dict[int, list] = {}
        for rec in st.store.values():
            if rec.region is not None and rec.region != st.region:
                groups.setdefault(rec.region, []).append(rec)
        for region, records in sorted(groups.items()):
            self._send_transfer(v, "proxy", region, records, {"proxy_region": st.region})

    # -- overhearing ----------------------------------------------------------
    def _overhear(self, u: int, pkt) -> None:
        p = pkt.payload
        region = p["region"]
        nodes = self.world.nodes
        now = self.sim.now
        for w in self.net.phys_neighbors(u):
            w = int(w)
            if nodes[w].current_region == region and w != p["server"]:
                self.cache(w).add(region, p["server"], p["server_pos"], now)

    # -- introspection --------------------------------------------------------
    def on_kill(self, node: int) -> None:
        st = self.servers.get(node)
        if st is not None:
            self.sim.cancel(st.failure_timer)
            self.sim.cancel(st.position_timer)

    def storage_counts(self) -> dict[int, int]:
        return {v: len(st.store) for v, st in self.servers.items() if self.world.nodes[v].alive and st.store}

    def replica_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for v, st in self.servers.items():
            if not self.world.nodes[v].alive:
                continue
            for k in st.store:
                out[k] = out.get(k, 0) + 1
        return out

    def servers_in(self, region: int) -> list[int]:
        return sorted(v for v, st in self.servers.items() if st.region == region and self.world.nodes[v].alive)


class _Local:
    """Stand-in packet for zero-hop deliveries (sender is the destination)."""

    def __init__(self, payload):
        self.payload = payload
