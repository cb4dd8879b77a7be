import numpy as np
import pytest

from rrsim.net import NetConfig, Network
from rrsim.sim import MetricsReport, RngBank, Simulator
from rrsim.world import Bounds, RegionGrid, World, bounds_for_density, place_uniform


class Env:
    """Small hand-built network for unit tests."""

    def __init__(self, positions, bounds, regions=4, ideal=True, seed=0, err=0.0, **netkw):
        self.bounds = bounds
        self.grid = RegionGrid.square(bounds, regions)
        self.world = World.build(positions, bounds, self.grid, err, 80.0, RngBank(seed)["error"])
        self.sim = Simulator()
        self.metrics = MetricsReport(self.world.n)
        self.rngs = RngBank(seed)
        self.net = Network(self.sim, self.world, self.metrics, self.rngs, NetConfig(ideal=ideal, **netkw))


def random_env(n=100, seed=0, regions=4, ideal=True, **kw) -> Env:
    bounds = bounds_for_density(n)
    pos = place_uniform(n, bounds, np.random.default_rng(seed))
    return Env(pos, bounds, regions, ideal, seed, **kw)


@pytest.fixture
def env100():
    return random_env(100, seed=3)


def square_bounds(side=320.0) -> Bounds:
    return Bounds(side, side)


# -- acceptance bookkeeping ------------------------------------------------------

OUTCOMES: dict[str, str] = {}
CRITERIA: dict[int, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        OUTCOMES[report.nodeid] = "xfailed" if hasattr(report, "wasxfail") else report.outcome


def pytest_collection_modifyitems(config, items):
    # the property-suite criterion reads outcomes of everything else
    last = [it for it in items if it.name.startswith("test_c12")]
    items[:] = [it for it in items if it not in last] + last


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):  # 10.5 is the n >= 1000 part of 10
            terminalreporter.write_line(CRITERIA[k])
