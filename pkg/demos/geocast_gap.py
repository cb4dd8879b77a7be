"""Why region gaps need face routing.

Region 0 holds two clusters that cannot hear each other directly; the only
path between them leaves the region. A plain in-region flood stops at the
first cluster, GFPG walks the face around the gap and reaches both.
"""

from rrsim.net import NetConfig, Network
from rrsim.sim import MetricsReport, RngBank, Simulator
from rrsim.world import Bounds, RegionGrid, World

left = [(20, y) for y in (20, 60, 100, 140)]
right = [(140, y) for y in (20, 60, 100, 140)]
bridge = [(20, 200), (80, 200), (140, 200)]  # outside region 0
positions = left + right + bridge
bounds = Bounds(320, 320)

for flavor in ("flood", "gfpg"):
    grid = RegionGrid.square(bounds, 4)
    world = World.build(positions, bounds, grid, 0.0, 80.0, RngBank(0)["error"])
    sim, metrics = Simulator(), MetricsReport(world.n)
    net = Network(sim, world, metrics, RngBank(0), NetConfig(ideal=True))
    pkt = net.new_packet("probe", "insertion", 0, region=0)
    state = net.geocast(0, pkt, 0, flavor)
    sim.run()
    print(f"{flavor:6} reached {sorted(state.receivers)} with {metrics.total()} transmissions")
