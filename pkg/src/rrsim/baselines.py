"""Flooding (local storage, flooded lookups) and centralized (one store near the
center of the space) baselines."""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .ops import NOT_FOUND, SUCCESS, KeyRecord, StorageProtocol, store_record


class FloodingProtocol(StorageProtocol):
    """Inserts stay at the origin; lookups flood the whole connected component.

    The flood is computed as a breadth-first search over the live radio graph,
    one transmission per reached node. The nearest holder (in hops) unicasts
    the reply.
    """

    name = "flooding"

    def __init__(self, net, metrics, rngs, retry_max: int = 3, op_timeout: float = 1.0):
        super().__init__(net, metrics, rngs, retry_max, op_timeout)
        self.stores: list[dict[int, KeyRecord]] = [dict() for _ in range(self.world.n)]
        self.inserted: set[int] = set()

    def _graph(self) -> csr_matrix:
        key = (self.world.version, self.world.alive_version)
        if getattr(self, "_graph_key", None) != key:
            self._graph_cache = self._build_graph()
            self._graph_key = key
        return self._graph_cache

    def _build_graph(self) -> csr_matrix:
        adj = self.net._adjacency()
        alive = self.world.alive_mask()
        rows, cols = [], []
        for u, nb in enumerate(adj):
            if not alive[u]:
                continue
            nb = nb[alive[nb]]
            rows.append(np.full(len(nb), u, dtype=np.int64))
            cols.append(nb)
        n = self.world.n
        if rows:
            r = np.concatenate(rows)
            c = np.concatenate(cols)
        else:
            r = c = np.zeros(0, dtype=np.int64)
        return csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n))

    def _attempt(self, op) -> None:
        u = op.origin
        if op.kind == "insert":
            store_record(self.stores[u], KeyRecord(op.key, op.value, u, None, op.aggregate))
            self.inserted.add(op.key)
            self.complete(op.op_id, SUCCESS)
            return
        order, pred = breadth_first_order(self._graph(), u, directed=False, return_predecessors=True)
        self.metrics.count_many(order, "lookup")
        self.metrics.kinds["flood"] += len(order)
        holder = None
        for w in order:  # BFS order = non-decreasing hop count
            if op.key in self.stores[w]:
                holder = int(w)
                break
        if holder is None:
            if op.key not in self.inserted:
                self.complete(op.op_id, NOT_FOUND)
            # otherwise every holder is dead or cut off: let the op time out
            return
        hops = 0
        w = holder
        while w != u:
            w = pred[w]
            hops += 1
        flood_delay = sum(self.net.latency() for _ in range(hops))
        payload = {"op": op.op_id, "origin": u, "origin_pos": self.world.nodes[u].perceived_pos,
                   "status": SUCCESS, "value": self.stores[holder][op.key].value}
        self.sim.schedule(flood_delay, self.reply_to_origin, holder, payload, "lookup", "reply")

    def deliver(self, u: int, pkt, how: str) -> None:
        if how == "arrived" and pkt.kind == "reply":
            p = pkt.payload
            self.complete(p["op"], p["status"], p.get("value"))

    def storage_counts(self) -> dict[int, int]:
        return {w: len(s) for w, s in enumerate(self.stores) if s and self.world.nodes[w].alive}

    def replica_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for w, s in enumerate(self.stores):
            if self.world.nodes[w].alive:
                for k in s:
                    out[k] = out.get(k, 0) + 1
        return out


class CentralizedProtocol(StorageProtocol):
    """Every insertion and lookup is unicast to the node nearest the center."""

    name = "centralized"

    def __init__(self, net, metrics, rngs, retry_max: int = 3, op_timeout: float = 1.0, central: int | None = None):
        super().__init__(net, metrics, rngs, retry_max, op_timeout)
        self.central = self.world.closest_node(self.world.bounds.center) if central is None else central
        self.store: dict[int, KeyRecord] = {}

    def _attempt(self, op) -> None:
        c = self.central
        payload = {"op": op.op_id, "origin": op.origin, "origin_pos": self.world.nodes[op.origin].perceived_pos,
                   "key": op.key}
        if op.kind == "insert":
            payload["record"] = KeyRecord(op.key, op.value, op.origin, None, op.aggregate)
        if op.origin == c:
            self._serve(c, op.kind, payload)
            return
        category = "insertion" if op.kind == "insert" else "lookup"
        pkt = self.net.new_packet(op.kind, category, op.origin, node=c, payload=payload)
        self.net.send(op.origin, pkt)

    def _serve(self, c: int, kind: str, p: dict) -> None:
        if not self.world.nodes[c].alive:
            return
        if kind == "insert":
            store_record(self.store, p["record"])
            self.reply_to_origin(c, {**p, "record": None, "status": SUCCESS}, "insertion", "ins_ack")
        else:
            rec = self.store.get(p["key"])
            status = SUCCESS if rec is not None else NOT_FOUND
            self.reply_to_origin(c, {**p, "status": status, "value": rec.value if rec else None}, "lookup", "reply")

    def deliver(self, u: int, pkt, how: str) -> None:
        if how != "arrived":
            return
        if pkt.kind in ("insert", "lookup"):
            self._serve(u, pkt.kind, pkt.payload)
        else:
            p = pkt.payload
            self.complete(p["op"], p["status"], p.get("value"))

    def storage_counts(self) -> dict[int, int]:
        if self.store and self.world.nodes[self.central].alive:
            return {self.central: len(self.store)}
        return {}

    def replica_counts(self) -> dict[int, int]:
        return {k: 1 for k in self.store} if self.world.nodes[self.central].alive else {}

