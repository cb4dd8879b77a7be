"""Discrete-event engine, labelled random streams and the metrics bus."""

from __future__ import annotations

import heapq
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .world import mix64, label_hash

CATEGORIES = (
    "insertion",
    "lookup",
    "periodic",
    "mobility_update",
    "election",
    "routing_beacon",
)

DEFAULT_EVENT_CAP = 10**8


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current clock."""


class EventCapExceeded(RuntimeError):
    pass


@dataclass(order=True)
class Event:
    fire_time: float
    seq: int
    action: Callable[..., Any] = field(compare=False)
    args: tuple = field(default=(), compare=False)
    target: int | None = field(default=None, compare=False)
    cancelled: bool = field(default=False, compare=False)


class Simulator:
    """Single global queue ordered by ``(fire_time, seq)``."""

    def __init__(self, max_events: int = DEFAULT_EVENT_CAP):
        self.now = 0.0
        self.max_events = max_events
        self.processed = 0
        self._queue: list[Event] = []
        self._seq = 0
        self._live = 0
        self.trace: list[tuple[float, int]] | None = None

    def __len__(self) -> int:
        return self._live

    def schedule_at(self, fire_time: float, action, *args, target=None) -> Event:
        if fire_time < self.now:
            raise SchedulingError(f"cannot schedule at t={fire_time} before clock t={self.now}")
        ev = Event(fire_time, self._seq, action, args, target)
        self._seq += 1
        self._live += 1
        heapq.heappush(self._queue, ev)
        return ev

    def schedule(self, delay: float, action, *args, target=None) -> Event:
        if delay < 0:
            raise SchedulingError(f"negative delay {delay}")
        return self.schedule_at(self.now + delay, action, *args, target=target)

    def cancel(self, ev: Event | None) -> None:
        if ev is not None and not ev.cancelled:
            ev.cancelled = True
            self._live -= 1

    def step(self) -> bool:
        while self._queue:
            ev = heapq.heappop(self._queue)
            if ev.cancelled:
                continue
            self._live -= 1
            ev.cancelled = True  # a fired event cannot be cancelled again
            self.now = ev.fire_time
            self.processed += 1
            if self.processed > self.max_events:
                raise EventCapExceeded(
                    f"event cap {self.max_events} exceeded at t={self.now:.3f}"
                )
            if self.trace is not None:
                self.trace.append((ev.fire_time, ev.seq))
            ev.action(*ev.args)
            return True
        return False

    def run(self, until: float = float("inf")) -> None:
        q = self._queue
        while q:
            head = q[0]
            if head.cancelled:
                heapq.heappop(q)
                continue
            if head.fire_time > until:
                break
            self.step()
        if until != float("inf") and until > self.now:
            self.now = until


class RngStream:
    """Counter-based generator keyed by ``(seed, label)``.

    The label is folded through mix64 so that subsystems never share draws.
    """

    def __init__(self, seed: int, label: str):
        self.seed = int(seed)
        self.label = label
        key = mix64((self.seed & 0xFFFFFFFFFFFFFFFF) ^ label_hash(label))
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def uniform01(self) -> float:
        return float(self.gen.random())

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * float(self.gen.random())

    def uniform_int(self, n: int) -> int:
        return int(self.gen.integers(n))

    def exp(self, rate: float) -> float:
        return float(self.gen.exponential(1.0 / rate))

    def bits64(self) -> int:
        return int(self.gen.integers(0, 2**64, dtype=np.uint64))


class RngBank:
    """Lazily creates one stream per label for a run seed."""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, RngStream] = {}

    def __getitem__(self, label: str) -> RngStream:
        s = self._streams.get(label)
        if s is None:
            s = self._streams[label] = RngStream(self.seed, label)
        return s


@dataclass
class LookupOutcome:
    issued_at: float
    latency: float | None
    success: bool
    status: str  # "success" | "not_found" | "failure"


@dataclass
class InsertOutcome:
    issued_at: float
    latency: float | None
    success: bool


class MetricsReport:
    """Per-node message counters by category plus operation outcomes."""

    def __init__(self, n: int):
        self.n = n
        self._counts = {c: np.zeros(n, dtype=np.int64) for c in CATEGORIES}
        self.lookup_outcomes: list[LookupOutcome] = []
        self.insert_outcomes: list[InsertOutcome] = []
        self.storage_entries: dict[int, int] = {}
        self.ttl_drops = 0
        self.issued_ops = 0
        self.notes: dict[str, Any] = {}
        self.series: dict[str, list[tuple[float, int]]] = {}
        self.kinds: Counter = Counter()  # transmissions per packet kind

    # -- counting ---------------------------------------------------------
    def count(self, node: int, category: str, k: int = 1) -> None:
        self._counts[category][node] += k

    def count_many(self, nodes, category: str) -> None:
        np.add.at(self._counts[category], np.asarray(nodes, dtype=np.int64), 1)

    def mark(self, category: str, t: float) -> None:
        """Append (t, running total of ``category``) to ``series[category]``."""
        self.series.setdefault(category, []).append((t, self.total(category)))

    # -- derived ------------------------------------------------------------
    @property
    def per_node_msg_counts(self) -> dict[int, dict[str, int]]:
        out = {}
        for i in range(self.n):
            row = {c: int(self._counts[c][i]) for c in CATEGORIES if self._counts[c][i]}
            if row:
                out[i] = row
        return out

    def category_array(self, category: str) -> np.ndarray:
        return self._counts[category].copy()

    def total(self, *categories: str) -> int:
        cats = categories or CATEGORIES
        return int(sum(int(self._counts[c].sum()) for c in cats))

    def per_node(self, *categories: str) -> np.ndarray:
        cats = categories or CATEGORIES
        acc = np.zeros(self.n, dtype=np.int64)
        for c in cats:
            acc += self._counts[c]
        return acc

    def hotspot(self, *categories: str) -> int:
        arr = self.per_node(*categories)
        return int(arr.max()) if arr.size else 0

    def success_rate(self) -> float:
        if not self.lookup_outcomes:
            return float("nan")
        return sum(o.success for o in self.lookup_outcomes) / len(self.lookup_outcomes)

    def insert_success_rate(self) -> float:
        if not self.insert_outcomes:
            return float("nan")
        return sum(o.success for o in self.insert_outcomes) / len(self.insert_outcomes)

    def lookup_status_counts(self) -> dict[str, int]:
        out = {"success": 0, "not_found": 0, "failure": 0}
        for o in self.lookup_outcomes:
            out[o.status] += 1
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "counts": {c: self._counts[c].tolist() for c in CATEGORIES},
            "lookups": [[o.issued_at, o.latency, o.success, o.status] for o in self.lookup_outcomes],
            "inserts": [[o.issued_at, o.latency, o.success] for o in self.insert_outcomes],
            "storage": {str(k): v for k, v in sorted(self.storage_entries.items())},
            "ttl_drops": self.ttl_drops,
            "issued_ops": self.issued_ops,
            "notes": self.notes,
            "series": self.series,
            "kinds": dict(sorted(self.kinds.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)
