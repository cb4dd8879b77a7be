"""Scenario configuration (a flat ``section.field = value`` text format) and
workload generation."""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field, fields, is_dataclass, replace

from .world import DEFAULT_DENSITY

PROTOCOLS = ("rr", "ght", "ght_star", "flooding", "centralized")
MODES = ("detailed", "high_level")


class ScenarioError(ValueError):
    """Raised with every violation found, one per line."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("\n".join(problems))


@dataclass
class Topology:
    n: int = 100
    width: float | None = None
    height: float | None = None
    density: float = DEFAULT_DENSITY
    seed: int = 1
    region_population: int | None = None  # if set, R is derived as n / this


@dataclass
class Radio:
    range: float = 80.0
    loss: float = 0.0


@dataclass
class Grid:
    regions: int = 4
    region_side: float | None = None


@dataclass
class Protocol:
    name: str = "rr"
    s_min: int = 3
    check_interval: float = 20.0
    retry_max: int = 3
    cache_ttl: float = 30.0
    geocast: str = "flood"
    hash_count: int = 1
    op_timeout: float = 1.0
    refresh_interval: float = 10.0
    replanarize_interval: float = 0.0  # 0 = only when the neighbor set changes
    position_check: float = 1.0


@dataclass
class Workload:
    model: str = "service"
    insertions: int = 30
    lookups: int = 300
    lookup_rate: float = 2.0
    insert_start: float = 2.0
    insert_window: float = 1.0
    lookup_start: float = 5.0
    lookup_jitter: float = 0.5  # fraction of the inter-lookup gap
    key_bits: int = 63
    event_types: int = 100
    events_per_type: int = 10
    queries: int = 50
    aggregate: bool = True


@dataclass
class Dynamics:
    max_speed: float = 0.0
    pause_time: float = 0.0
    mobility_dt: float = 0.5
    failure_fraction: float = 0.0
    error_fraction: float = 0.0


@dataclass
class ScenarioConfig:
    topology: Topology = field(default_factory=Topology)
    radio: Radio = field(default_factory=Radio)
    grid: Grid = field(default_factory=Grid)
    protocol: Protocol = field(default_factory=Protocol)
    workload: Workload = field(default_factory=Workload)
    dynamics: Dynamics = field(default_factory=Dynamics)
    duration: float = 200.0
    mode: str = "detailed"
    seed: int = 1

    # derived --------------------------------------------------------------
    def bounds(self):
        from .world import Bounds, bounds_for_density

        t = self.topology
        if t.width is not None and t.height is not None:
            return Bounds(t.width, t.height)
        return bounds_for_density(t.n, t.density)

    def region_count(self) -> int:
        t = self.topology
        if t.region_population:
            k = max(1, round(math.sqrt(t.n / t.region_population)))
            return k * k
        return self.grid.regions

    def grid_obj(self):
        from .world import RegionGrid

        b = self.bounds()
        if self.grid.region_side is not None:
            return RegionGrid(b.width, b.height, self.grid.region_side)
        return RegionGrid.square(b, self.region_count())

    def with_(self, **changes) -> "ScenarioConfig":
        """Copy with dotted-path overrides, e.g. ``with_(**{"topology.n": 200})``."""
        out = replace(self)
        for path, value in changes.items():
            _set_path(out, path, value, copy=True)
        return out


def _sections(cfg) -> list[tuple[str, object]]:
    return [(f.name, getattr(cfg, f.name)) for f in fields(cfg)]


def _set_path(cfg, path: str, value, copy: bool = False) -> None:
    parts = path.split(".")
    obj = cfg
    for p in parts[:-1]:
        child = getattr(obj, p)
        if copy:
            child = replace(child)
            setattr(obj, p, child)
        obj = child
    setattr(obj, parts[-1], value)


def _field_map() -> dict[str, type]:
    out = {}
    for f in fields(ScenarioConfig):
        default = getattr(ScenarioConfig(), f.name)
        if is_dataclass(default):
            for g in fields(default):
                out[f"{f.name}.{g.name}"] = g.type
        else:
            out[f.name] = f.type
    return out


def _coerce(raw: str, type_name: str):
    raw = raw.strip()
    if raw in ("none", "None", ""):
        if "None" in type_name:
            return None
        raise ValueError("value required")
    if type_name.startswith("bool"):
        if raw.lower() in ("true", "yes", "on", "1"):
            return True
        if raw.lower() in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if type_name.startswith("int"):
        return int(raw, 0)
    if type_name.startswith("float"):
        if raw in ("inf", "infinity"):
            return math.inf
        return float(raw)
    if type_name.startswith("str"):
        if raw[:1] in "\"'":
            return ast.literal_eval(raw)
        return raw
    raise ValueError(f"unsupported type {type_name}")


def parse_scenario(text: str) -> ScenarioConfig:
    cfg = ScenarioConfig()
    types = _field_map()
    problems: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in types:
            problems.append(f"{key}: unknown field")
            continue
        try:
            _set_path(cfg, key, _coerce(raw, str(types[key])))
        except ValueError as exc:
            problems.append(f"{key}: {exc}")
    problems += validate(cfg)
    if problems:
        raise ScenarioError(problems)
    return cfg


def format_scenario(cfg: ScenarioConfig) -> str:
    lines = []
    for name, val in _sections(cfg):
        if is_dataclass(val):
            for g in fields(val):
                lines.append(f"{name}.{g.name} = {_fmt(getattr(val, g.name))}")
        else:
            lines.append(f"{name} = {_fmt(val)}")
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def validate(cfg: ScenarioConfig) -> list[str]:
    p = []
    t, w, d, pr = cfg.topology, cfg.workload, cfg.dynamics, cfg.protocol
    if t.n < 1:
        p.append("topology.n: must be >= 1")
    if (t.width is None) != (t.height is None):
        p.append("topology.width/height: give both or neither")
    if t.width is not None and (t.width <= 0 or t.height <= 0):
        p.append("topology.width/height: must be positive")
    if t.density <= 0:
        p.append("topology.density: must be positive")
    if t.region_population is not None and t.region_population < 1:
        p.append("topology.region_population: must be >= 1")
    if cfg.radio.range <= 0:
        p.append("radio.range: must be positive")
    if not 0.0 <= cfg.radio.loss < 1.0:
        p.append("radio.loss: must be in [0, 1)")
    if t.region_population is None and cfg.grid.region_side is None:
        k = math.isqrt(max(cfg.grid.regions, 0))
        if cfg.grid.regions < 1 or k * k != cfg.grid.regions:
            p.append("grid.regions: must be a positive perfect square")
    if cfg.grid.region_side is not None and cfg.grid.region_side <= 0:
        p.append("grid.region_side: must be positive")
    if pr.name not in PROTOCOLS:
        p.append(f"protocol.name: must be one of {', '.join(PROTOCOLS)}")
    if pr.geocast not in ("flood", "gfpg"):
        p.append("protocol.geocast: must be flood or gfpg")
    if pr.s_min < 1:
        p.append("protocol.s_min: must be >= 1")
    if pr.hash_count < 1:
        p.append("protocol.hash_count: must be >= 1")
    for name in ("check_interval", "cache_ttl", "op_timeout", "refresh_interval", "position_check"):
        if getattr(pr, name) <= 0:
            p.append(f"protocol.{name}: must be positive")
    if pr.retry_max < 0:
        p.append("protocol.retry_max: must be >= 0")
    if pr.replanarize_interval < 0:
        p.append("protocol.replanarize_interval: must be >= 0")
    if w.model not in ("service", "event"):
        p.append("workload.model: must be service or event")
    for name in ("insertions", "lookups", "event_types", "events_per_type", "queries"):
        if getattr(w, name) < 0:
            p.append(f"workload.{name}: must be >= 0")
    for name in ("lookup_rate", "insert_start", "insert_window", "lookup_start", "lookup_jitter"):
        if getattr(w, name) < 0:
            p.append(f"workload.{name}: must be >= 0")
    if w.lookups > 0 and w.lookup_rate <= 0:
        p.append("workload.lookup_rate: must be positive when lookups > 0")
    if not 1 <= w.key_bits <= 64:
        p.append("workload.key_bits: must be in [1, 64]")
    for name in ("max_speed", "pause_time", "failure_fraction", "error_fraction"):
        if getattr(d, name) < 0:
            p.append(f"dynamics.{name}: must be >= 0")
    if d.failure_fraction > 1:
        p.append("dynamics.failure_fraction: must be <= 1")
    if d.mobility_dt <= 0:
        p.append("dynamics.mobility_dt: must be positive")
    if cfg.mode not in MODES:
        p.append("mode: must be detailed or high_level")
    if cfg.duration <= 0:
        p.append("duration: must be positive")
    elif not p and workload_end(cfg) > cfg.duration:
        p.append(f"duration: {cfg.duration} does not cover the workload (ends at {workload_end(cfg):.1f})")
    return p


# ---------------------------------------------------------------------------
# workloads


@dataclass(frozen=True)
class TimedOp:
    time: float
    kind: str  # insert | lookup
    origin: int
    key: int
    value: object = None
    aggregate: bool = False


@dataclass
class WorkloadModel:
    model: str
    insertions: int
    lookups: int
    event_types: int = 0
    events_per_type: int = 0
    queries: int = 0
    gateway: int | None = None

    @property
    def lir(self) -> float:
        if self.insertions == 0:
            raise ValueError("LIR undefined without insertions")
        return self.lookups / self.insertions

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "WorkloadModel":
        w = cfg.workload
        if w.model == "event":
            return cls("event", w.event_types * w.events_per_type, w.queries, w.event_types,
                       w.events_per_type, w.queries, 0)
        return cls("service", w.insertions, w.lookups)


def workload_end(cfg: ScenarioConfig) -> float:
    w = cfg.workload
    if w.model == "event":
        n_look = w.queries
        ins_end = event_insert_end(cfg)
    else:
        n_look = w.lookups
        ins_end = w.insert_start + w.insert_window
    look_end = w.lookup_start + (n_look / w.lookup_rate if n_look and w.lookup_rate > 0 else 0.0)
    return max(ins_end, look_end)


def event_insert_end(cfg: ScenarioConfig) -> float:
    """Event detections are spread over the whole query period."""
    w = cfg.workload
    look_end = w.lookup_start + (w.queries / w.lookup_rate if w.queries and w.lookup_rate > 0 else 0.0)
    return max(w.insert_start + w.insert_window, look_end)


def gen_workload(cfg: ScenarioConfig, rng) -> list[TimedOp]:
    """Timed operations for ``cfg``; draws only from ``rng``."""
    w = cfg.workload
    n = cfg.topology.n
    mask = (1 << w.key_bits) - 1
    ops: list[TimedOp] = []
    gap = 1.0 / w.lookup_rate if w.lookup_rate > 0 else 0.0
    if w.model == "service":
        keys = [rng.bits64() & mask for _ in range(w.insertions)]
        for i, k in enumerate(keys):
            t = w.insert_start + w.insert_window * rng.uniform01()
            ops.append(TimedOp(t, "insert", rng.uniform_int(n), k, ("v", i)))
        for j in range(w.lookups):
            t = w.lookup_start + j * gap + w.lookup_jitter * gap * rng.uniform01()
            k = keys[rng.uniform_int(len(keys))] if keys else rng.bits64() & mask
            ops.append(TimedOp(t, "lookup", rng.uniform_int(n), k))
    else:
        type_keys = [rng.bits64() & mask for _ in range(w.event_types)]
        ins_end = event_insert_end(cfg)
        for ti, k in enumerate(type_keys):
            for e in range(w.events_per_type):
                t = w.insert_start + (ins_end - w.insert_start) * rng.uniform01()
                ops.append(TimedOp(t, "insert", rng.uniform_int(n), k, (f"ev{ti}.{e}",), w.aggregate))
        gateway = 0
        for j in range(w.queries):
            t = w.lookup_start + j * gap + w.lookup_jitter * gap * rng.uniform01()
            k = type_keys[rng.uniform_int(len(type_keys))] if type_keys else rng.bits64() & mask
            ops.append(TimedOp(t, "lookup", gateway, k))
    ops.sort(key=lambda o: o.time)
    return ops


def default_config() -> ScenarioConfig:
    return ScenarioConfig()
