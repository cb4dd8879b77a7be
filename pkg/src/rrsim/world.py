"""Geometry, the region grid, key hashing, placement, mobility, failures and
location error."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
DEFAULT_DENSITY = 1.0 / 1024.0  # nodes per m^2


def mix64(x: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def label_hash(label: str) -> int:
    h = 0
    data = label.encode("utf-8")
    for i in range(0, len(data), 8):
        h = mix64(h ^ int.from_bytes(data[i : i + 8], "little"))
    return mix64(h ^ len(data))


def _unit(z: int) -> float:
    # top 53 bits -> [0, 1)
    return (z >> 11) * (1.0 / (1 << 53))


class OutOfBounds(ValueError):
    pass


@dataclass(frozen=True)
class Bounds:
    width: float
    height: float

    def contains(self, p) -> bool:
        return 0.0 <= p[0] < self.width and 0.0 <= p[1] < self.height

    def clamp(self, p) -> tuple[float, float]:
        x = min(max(p[0], 0.0), math.nextafter(self.width, 0.0))
        y = min(max(p[1], 0.0), math.nextafter(self.height, 0.0))
        return (x, y)

    @property
    def center(self) -> tuple[float, float]:
        return (self.width / 2.0, self.height / 2.0)

    @property
    def area(self) -> float:
        return self.width * self.height


def bounds_for_density(n: int, density: float = DEFAULT_DENSITY) -> Bounds:
    side = math.sqrt(n / density)
    return Bounds(side, side)


@dataclass(frozen=True)
class RegionGrid:
    width: float
    height: float
    region_side: float

    @property
    def cols(self) -> int:
        return max(1, math.ceil(self.width / self.region_side - 1e-9))

    @property
    def rows(self) -> int:
        return max(1, math.ceil(self.height / self.region_side - 1e-9))

    @property
    def R(self) -> int:
        return self.cols * self.rows

    @classmethod
    def square(cls, bounds: Bounds, regions: int) -> "RegionGrid":
        """Grid of ``regions`` equal squares; ``regions`` must be a perfect square
        when the space is square."""
        k = math.isqrt(regions)
        if k * k != regions:
            raise ValueError(f"region count {regions} is not a perfect square")
        return cls(bounds.width, bounds.height, bounds.width / k)

    def region_of(self, p) -> int:
        x, y = p[0], p[1]
        if not (0.0 <= x < self.width and 0.0 <= y < self.height):
            raise OutOfBounds(f"position {p!r} outside {self.width}x{self.height}")
        col = min(int(x // self.region_side), self.cols - 1)
        row = min(int(y // self.region_side), self.rows - 1)
        return row * self.cols + col

    def rect(self, region: int) -> tuple[float, float, float, float]:
        row, col = divmod(region, self.cols)
        x0 = col * self.region_side
        y0 = row * self.region_side
        return (x0, y0, min(x0 + self.region_side, self.width), min(y0 + self.region_side, self.height))

    def center(self, region: int) -> tuple[float, float]:
        x0, y0, x1, y1 = self.rect(region)
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)

    def perimeter(self, region: int) -> float:
        x0, y0, x1, y1 = self.rect(region)
        return 2.0 * ((x1 - x0) + (y1 - y0))

    def diameter(self, region: int) -> float:
        x0, y0, x1, y1 = self.rect(region)
        return math.hypot(x1 - x0, y1 - y0)


def hash_key_to_region(key_id: int, grid: RegionGrid, hash_index: int = 0) -> int:
    return mix64((key_id & MASK64) ^ mix64(hash_index)) % grid.R


def hash_key_to_point(key_id: int, bounds: Bounds, ght_star: bool = False, hash_index: int = 0) -> tuple[float, float]:
    z1 = mix64((key_id & MASK64) ^ mix64(0x5851F42D4C957F2D + hash_index))
    z2 = mix64(z1)
    u1, u2 = _unit(z1), _unit(z2)
    if ght_star:
        u1 = 0.1 + 0.8 * u1
        u2 = 0.1 + 0.8 * u2
    return (bounds.width * u1, bounds.height * u2)


def place_uniform(n: int, bounds: Bounds, rng) -> np.ndarray:
    gen = rng.gen if hasattr(rng, "gen") else rng
    pts = gen.random((n, 2))
    pts[:, 0] *= bounds.width
    pts[:, 1] *= bounds.height
    return pts


def perceived_position(true_pos, max_err_fraction: float, radio_range: float, rng, bounds: Bounds | None = None):
    """Uniform point in the disk of radius ``max_err_fraction * radio_range``."""
    r_max = max_err_fraction * radio_range
    if r_max <= 0:
        return (float(true_pos[0]), float(true_pos[1]))
    r = r_max * math.sqrt(rng.uniform01())
    theta = 2.0 * math.pi * rng.uniform01()
    p = (true_pos[0] + r * math.cos(theta), true_pos[1] + r * math.sin(theta))
    return bounds.clamp(p) if bounds is not None else p


# ---------------------------------------------------------------------------
# nodes and mobility


@dataclass
class NodeState:
    id: int
    true_pos: tuple[float, float]
    perceived_pos: tuple[float, float]
    alive: bool = True
    err_offset: tuple[float, float] = (0.0, 0.0)
    waypoint: tuple[float, float] | None = None
    speed: float = 0.0
    pause_left: float = 0.0
    current_region: int = -1
    kill_time: float | None = None


MIN_SPEED_FRACTION = 0.01


def _draw_leg(node: NodeState, bounds: Bounds, max_speed: float, rng) -> None:
    node.waypoint = (rng.uniform01() * bounds.width, rng.uniform01() * bounds.height)
    lo = MIN_SPEED_FRACTION * max_speed
    node.speed = lo + (max_speed - lo) * (1.0 - rng.uniform01())  # (lo, max]


def random_waypoint_step(node: NodeState, max_speed: float, pause_time: float, rng, dt: float, bounds: Bounds) -> NodeState:
    """Advance one node by ``dt`` seconds of random-waypoint motion (in place)."""
    if max_speed <= 0:
        raise ValueError("max_speed must be positive")
    t = dt
    x, y = node.true_pos
    while t > 1e-12:
        if node.pause_left > 0:
            if math.isinf(node.pause_left):
                break
            used = min(t, node.pause_left)
            node.pause_left -= used
            t -= used
            continue
        if node.waypoint is None:
            _draw_leg(node, bounds, max_speed, rng)
        wx, wy = node.waypoint
        d = math.hypot(wx - x, wy - y)
        reach = node.speed * t
        if reach < d:
            x += (wx - x) * reach / d
            y += (wy - y) * reach / d
            t = 0.0
        else:
            x, y = wx, wy
            t -= d / node.speed if node.speed > 0 else t
            node.waypoint = None
            node.pause_left = pause_time
    node.true_pos = bounds.clamp((x, y))
    return node


def inject_failures(n: int, fraction: float, duration: float, rng) -> dict[int, float]:
    """Map node id -> kill time for independently selected nodes."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("failure fraction must be in [0, 1]")
    out = {}
    for i in range(n):
        pick = rng.uniform01() < fraction
        t = rng.uniform01()
        if pick:
            out[i] = max(t, 1e-9) * duration
    return out


@dataclass
class World:
    """Per-run node table plus cached position arrays."""

    bounds: Bounds
    grid: RegionGrid
    nodes: list[NodeState] = field(default_factory=list)
    version: int = 0
    alive_version: int = 0

    @classmethod
    def build(cls, positions, bounds: Bounds, grid: RegionGrid, err_fraction: float = 0.0,
              radio_range: float = 80.0, rng=None) -> "World":
        w = cls(bounds, grid)
        for i, (x, y) in enumerate(np.asarray(positions, dtype=float)):
            tp = (float(x), float(y))
            if err_fraction > 0:
                pp = perceived_position(tp, err_fraction, radio_range, rng, bounds)
            else:
                pp = tp
            node = NodeState(i, tp, pp, err_offset=(pp[0] - tp[0], pp[1] - tp[1]))
            w.nodes.append(node)
        w.refresh()
        return w

    @property
    def n(self) -> int:
        return len(self.nodes)

    def refresh(self) -> None:
        """Recompute perceived positions/regions after true positions changed."""
        for nd in self.nodes:
            ox, oy = nd.err_offset
            nd.perceived_pos = self.bounds.clamp((nd.true_pos[0] + ox, nd.true_pos[1] + oy))
            nd.current_region = self.grid.region_of(nd.perceived_pos)
        self._true = np.array([nd.true_pos for nd in self.nodes], dtype=float).reshape(-1, 2)
        self._perc = np.array([nd.perceived_pos for nd in self.nodes], dtype=float).reshape(-1, 2)
        self._alive = np.array([nd.alive for nd in self.nodes], dtype=bool)
        self.version += 1

    def true_xy(self) -> np.ndarray:
        return self._true

    def perceived_xy(self) -> np.ndarray:
        return self._perc

    def alive_mask(self) -> np.ndarray:
        return self._alive

    def kill(self, i: int) -> None:
        self.nodes[i].alive = False
        self._alive[i] = False
        self.alive_version += 1

    def move_node(self, i: int, pos) -> None:
        self.nodes[i].true_pos = self.bounds.clamp(pos)
        self.refresh()

    def region(self, i: int) -> int:
        return self.nodes[i].current_region

    def pos(self, i: int) -> tuple[float, float]:
        return self.nodes[i].perceived_pos

    def alive(self, i: int) -> bool:
        return self.nodes[i].alive

    def nodes_in_region(self, region: int, alive_only: bool = True) -> list[int]:
        return [nd.id for nd in self.nodes if nd.current_region == region and (nd.alive or not alive_only)]

    def closest_node(self, point, alive_only: bool = True, use_perceived: bool = True) -> int:
        xy = self._perc if use_perceived else self._true
        d = np.hypot(xy[:, 0] - point[0], xy[:, 1] - point[1])
        if alive_only:
            d = np.where(self._alive, d, np.inf)
        return int(np.argmin(d))
