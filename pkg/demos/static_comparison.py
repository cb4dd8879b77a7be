"""Side-by-side static run of rendezvous regions, GHT and GHT*.

100 nodes at the default density, 30 insertions followed by 300 lookups.
Prints per-operation costs, storage and success for each scheme, then the
normalized overhead at a few lookup-to-insertion ratios.
"""

from rrsim import analysis
from rrsim.runner import run_scenario
from rrsim.scenario import ScenarioConfig

rows = {}
for name in ("rr", "ght", "ght_star"):
    res = run_scenario(ScenarioConfig().with_(**{"protocol.name": name}))
    sm = res.summary()
    reps = res.protocol.replica_counts()
    sm["replicas"] = sum(reps.values()) / max(len(reps), 1)
    rows[name] = sm

print(f"{'scheme':10} {'success':>8} {'ins/op':>8} {'look/op':>8} {'replicas':>9} {'periodic':>9}")
for name, sm in rows.items():
    print(f"{name:10} {sm['success']:8.3f} {sm['ins_per_op']:8.1f} {sm['lookup_per_op']:8.1f} "
          f"{sm['replicas']:9.1f} {sm['periodic_msgs']:9d}")

# Inserts are expensive for RR (geocast to the region), lookups are cheap
# (anycast to a cached server). The balance tips with the lookup ratio.
print("\nnormalized overhead per operation")
for lir in (0.1, 1.0, 10.0):
    cells = {n: analysis.norm_overhead(sm["ins_per_op"], sm["lookup_per_op"], lir) for n, sm in rows.items()}
    print(f"  LIR={lir:5}: " + "  ".join(f"{n}={v:.1f}" for n, v in cells.items()))
