"""Lookup success under random-waypoint mobility.

RR keeps servers inside their region with position checks and hands
records over when a server leaves. GHT depends on the home perimeter,
which drifts as nodes move. Success is printed per speed for both.
"""

from rrsim import suites
from rrsim.runner import run_scenario

print(f"{'speed':>6} {'rr':>7} {'ght':>7} {'rr mobility msgs':>17} {'ght refresh msgs':>17}")
for speed in (0.0, 1.0, 5.0):
    out = {}
    for name in ("rr", "ght"):
        out[name] = run_scenario(suites.mobility_cfg(name, 9, speed)).summary()
    print(f"{speed:6.1f} {out['rr']['success']:7.3f} {out['ght']['success']:7.3f} "
          f"{out['rr']['mobility_msgs']:17d} {out['ght']['periodic_msgs']:17d}")
