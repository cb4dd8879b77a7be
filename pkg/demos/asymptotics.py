"""Asymptotic cost table next to a small simulated check.

The model predicts per-scheme total and hotspot message counts as the
network grows with a fixed region population. The simulated column runs
each scheme in high-level mode at n = 100 and 1000.
"""

from rrsim import analysis, suites
from rrsim.runner import run_scenario

for n in (100, 1000):
    m = analysis.OverheadModel(n, 10, 100, max(n // 100, 1), 3)
    print(f"n = {n}")
    for scheme in ("rr", "ght", "centralized", "flooding"):
        est = analysis.asymptotic_costs(m, scheme)
        sm = run_scenario(suites.scaling_cfg(scheme, n)).summary()
        print(f"  {scheme:12} model total {est.total:9.0f} hotspot {est.hotspot:7.1f} | "
              f"simulated total {sm['total_msgs']:7d} hotspot {sm['hotspot']:5d}")
