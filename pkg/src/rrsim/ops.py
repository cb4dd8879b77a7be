"""Operation bookkeeping shared by every storage protocol: ids, origin-side
retransmission timers and outcome recording."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

from .sim import InsertOutcome, LookupOutcome

SUCCESS = "success"
NOT_FOUND = "not_found"
FAILURE = "failure"


@dataclass(frozen=True)
class KeyRecord:
    key_id: int
    value: Any
    origin: int = -1
    region: int | None = None  # home region tag (differs for empty-region proxies)
    aggregate: bool = False

    def merge(self, newer: "KeyRecord") -> "KeyRecord":
        if newer.aggregate and self.aggregate:
            vals = tuple(sorted(set(self.value) | set(newer.value)))
            return KeyRecord(self.key_id, vals, newer.origin, newer.region, True)
        return newer


def store_record(store: dict, rec: KeyRecord) -> None:
    old = store.get(rec.key_id)
    store[rec.key_id] = rec if old is None else old.merge(rec)


@dataclass(eq=False)
class Op:
    op_id: int
    kind: str  # "insert" | "lookup"
    origin: int
    key: int
    value: Any
    issued_at: float
    region: int | None = None
    aggregate: bool = False
    attempts: int = 0
    done: bool = False
    status: str | None = None
    result: Any = None
    timer: Any = None
    callback: Callable | None = field(default=None, repr=False)


class StorageProtocol:
    """Base class: subclasses implement ``_attempt(op)`` and call ``complete``."""

    name = "base"

    def __init__(self, net, metrics, rngs, retry_max: int = 3, op_timeout: float = 1.0):
        self.net = net
        self.sim = net.sim
        self.world = net.world
        self.metrics = metrics
        self.rngs = rngs
        self.retry_max = retry_max
        self.op_timeout = op_timeout
        self.ops: dict[int, Op] = {}
        self._ids = itertools.count()
        net.protocol = self

    # -- public API -------------------------------------------------------
    def insert(self, origin: int, key: int, value, *, region=None, aggregate=False, callback=None) -> Op:
        return self._issue("insert", origin, key, value, region, aggregate, callback)

    def lookup(self, origin: int, key: int, *, region=None, callback=None) -> Op:
        return self._issue("lookup", origin, key, None, region, False, callback)

    def start(self) -> None:
        """Arm protocol timers; called once before the run starts."""

    def on_kill(self, node: int) -> None:
        pass

    # -- machinery ----------------------------------------------------------
    def _issue(self, kind, origin, key, value, region, aggregate, callback) -> Op:
        op = Op(next(self._ids), kind, origin, key, value, self.sim.now, region, aggregate, callback=callback)
        self.ops[op.op_id] = op
        self.metrics.issued_ops += 1
        self._start(op)
        return op

    def _start(self, op: Op) -> None:
        if not self.world.nodes[op.origin].alive:
            self._finish(op, FAILURE)
            return
        op.attempts += 1
        op.timer = self.sim.schedule(self.op_timeout, self._on_timeout, op, op.attempts)
        self._attempt(op)

    def _attempt(self, op: Op) -> None:
        raise NotImplementedError

    def _on_timeout(self, op: Op, attempt: int) -> None:
        if op.done or attempt != op.attempts:
            return
        if op.attempts <= self.retry_max:
            self._start(op)
        else:
            self._finish(op, FAILURE)

    def complete(self, op_id: int, status: str, value=None) -> None:
        op = self.ops.get(op_id)
        if op is None or op.done:
            return
        if not self.world.nodes[op.origin].alive:
            return
        self._finish(op, status, value)

    def _finish(self, op: Op, status: str, value=None) -> None:
        op.done = True
        op.status = status
        op.result = value
        self.sim.cancel(op.timer)
        latency = self.sim.now - op.issued_at if status != FAILURE else None
        if op.kind == "lookup":
            self.metrics.lookup_outcomes.append(LookupOutcome(op.issued_at, latency, status == SUCCESS, status))
        else:
            self.metrics.insert_outcomes.append(InsertOutcome(op.issued_at, latency, status == SUCCESS))
        del self.ops[op.op_id]
        if op.callback is not None:
            op.callback(op)

    # -- helpers for subclasses ------------------------------------------
    def reply_to_origin(self, u: int, payload: dict, category: str, kind: str = "reply") -> None:
        """Unicast an operation result from u back to the op origin."""
        origin = payload["origin"]
        if u == origin:
            self.complete(payload["op"], payload["status"], payload.get("value"))
            return
        pkt = self.net.new_packet(kind, category, u, node=origin, point=payload["origin_pos"], payload=payload)
        self.net.send(u, pkt)

    def storage_counts(self) -> dict[int, int]:
        return {}

    def replica_counts(self) -> dict[int, int]:
        return {}
