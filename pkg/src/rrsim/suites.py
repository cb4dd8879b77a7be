"""Experiment suites: scenario grids, per-cell aggregation, CSV emission and
threshold checks."""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .ght import GHTProtocol
from .rr import RRProtocol
from .runner import RunResult, run_scenario
from .scenario import ScenarioConfig

SUITES = ("servers", "regions", "failures", "mobility", "inaccuracy", "scaling", "event", "gaps", "empty_regions")
CSV_COLUMNS = ("metric", "mean", "std", "seeds")
LIR_GRID = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


@dataclass
class SuiteResult:
    name: str
    rows: list[dict] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list[dict]]] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = [f"suite {self.name}: {'PASS' if self.passed else 'FAIL'} ({self.runtime:.1f} s, {len(self.rows)} runs)"]
        lines += [c.line() for c in self.checks]
        return "\n".join(lines) + "\n"


class SuiteAborted(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# running and recording


def record(res: RunResult) -> dict:
    """Flat per-run metrics (plus a few non-CSV extras under ``_``-keys)."""
    cfg = res.config
    row = res.summary()
    proto = res.protocol
    keys = {o.key for o in res.workload if o.kind == "insert"}
    reps = proto.replica_counts()
    row["replicas_mean"] = float(np.mean([reps.get(k, 0) for k in keys])) if keys else 0.0
    row["replicas_min"] = min((reps.get(k, 0) for k in keys), default=0)
    active = max(cfg.duration - cfg.workload.insert_start, 1e-9)
    row["periodic_rate"] = row["periodic_msgs"] / active
    row["mobility_rate"] = row["mobility_msgs"] / active
    row["lookup_ttl_or_fail"] = res.metrics.lookup_status_counts()["failure"]
    row["not_found"] = res.metrics.lookup_status_counts()["not_found"]
    row["_kinds"] = dict(res.metrics.kinds)
    if isinstance(proto, GHTProtocol):
        row["perimeter_mean"] = float(np.mean([len(h.perimeter_nodes) for h in proto.home.values()])) if proto.home else 0.0
        row["refresh_sent"] = proto.refresh_sent
    if isinstance(proto, RRProtocol):
        regions = []
        world = res.world
        for r in range(world.grid.R):
            srv = proto.servers_in(r)
            if srv:
                regions.append((len(world.nodes_in_region(r)), len(srv)))
        row["_regions"] = regions
        row["check_geocast_msgs"] = res.metrics.kinds.get("gc_check", 0)
        row["check_reply_msgs"] = res.metrics.kinds.get("check_reply", 0)
        row["election_rounds_max"] = max(proto.election_rounds, default=0)
        row["key_regions"] = len({r.region for st in proto.servers.values() for r in st.store.values()})
    return row


def _run_one(cfg: ScenarioConfig) -> dict:
    try:
        return record(run_scenario(cfg))
    except Exception as exc:  # surfaced with the offending cell
        raise SuiteAborted(f"run failed for protocol={cfg.protocol.name} seed={cfg.seed}: {exc!r}") from exc


def run_cells(cfgs: list[ScenarioConfig], workers: int = 1) -> list[dict]:
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_run_one, cfgs))
    return [_run_one(c) for c in cfgs]


SEEDING = {"base": 0, "runs_per_topology": 1, "mode": None}


def configure_seeding(base: int = 0, runs_per_topology: int = 1, mode: str | None = None) -> None:
    """Offset every suite seed by ``base``; ``runs_per_topology`` > 1 runs
    several workloads on each topology (e.g. 5 x 5); ``mode`` forces the
    simulation mode of every cell."""
    SEEDING["base"] = int(base)
    SEEDING["runs_per_topology"] = max(1, int(runs_per_topology))
    SEEDING["mode"] = mode


def seed_pairs(seeds: int) -> list[tuple[int, int]]:
    b, k = SEEDING["base"], SEEDING["runs_per_topology"]
    return [(b + t + 1, b + t * k + r + 1) for t in range(seeds) for r in range(k)]


def seeded(cfg: ScenarioConfig, topo_seed: int, run_seed: int | None = None) -> ScenarioConfig:
    """Topology ``topo_seed`` with run seed ``run_seed`` (default the same)."""
    run_seed = topo_seed if run_seed is None else run_seed
    over = {"seed": run_seed, "topology.seed": topo_seed}
    if SEEDING["mode"]:
        over["mode"] = SEEDING["mode"]
    return cfg.with_(**over)


def aggregate(rows: list[dict], by: list[str], metrics: list[str]) -> list[dict]:
    """Long-format per-cell statistics: by..., metric, mean, std, seeds."""
    cells: dict[tuple, list[dict]] = {}
    for r in rows:
        cells.setdefault(tuple(r[b] for b in by), []).append(r)
    out = []
    for key in sorted(cells, key=lambda k: tuple(str(x) if not isinstance(x, (int, float)) else x for x in k)):
        group = cells[key]
        for m in metrics:
            vals = np.array([g[m] for g in group if m in g and g[m] is not None], dtype=float)
            vals = vals[~np.isnan(vals)]
            row = dict(zip(by, key))
            row.update(metric=m, mean=float(vals.mean()) if len(vals) else math.nan,
                       std=float(vals.std(ddof=1)) if len(vals) > 1 else 0.0, seeds=len(vals))
            out.append(row)
    return out


def cell_mean(rows: list[dict], metric: str, **match) -> float:
    vals = [r[metric] for r in rows if all(r.get(k) == v for k, v in match.items())]
    return float(np.mean(vals)) if vals else math.nan


def emit_csv(result: SuiteResult, out_dir: str) -> list[str]:
    """Write one CSV per table plus ``<suite>_summary.txt``; return paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, (columns, rows) in sorted(result.tables.items()):
        path = os.path.join(out_dir, f"{result.name}_{name}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: _csv_val(row.get(k)) for k in columns})
        paths.append(path)
    path = os.path.join(out_dir, f"{result.name}_summary.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(result.summary())
    paths.append(path)
    return paths


def _csv_val(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return v


def _table(rows: list[dict], by: list[str], metrics: list[str]) -> tuple[list[str], list[dict]]:
    return list(by) + list(CSV_COLUMNS), aggregate(rows, by, metrics)


def _base(**over) -> ScenarioConfig:
    return ScenarioConfig().with_(**over)


# ---------------------------------------------------------------------------
# suites


def suite_servers(seeds: int = 5, s_values=(1, 2, 3, 4, 5, 6), insertions=(10, 30, 50), lir: float = 10.0,
                  workers: int = 1) -> SuiteResult:
    """Server-count sweep on 100 nodes / 4 regions at a fixed LIR."""
    t0 = time.perf_counter()
    cfgs = []
    for s in s_values:
        for ins in insertions:
            looks = int(round(ins * lir))
            dur = 10.0 + looks / 2.0 + 10.0
            base = _base(**{"protocol.s_min": s, "workload.insertions": ins, "workload.lookups": looks,
                            "duration": max(dur, 60.0), "grid.regions": 4})
            cfgs += [seeded(base, ts, rs) for ts, rs in seed_pairs(seeds)]
    rows = run_cells(cfgs, workers)
    for r, c in zip(rows, cfgs):
        r["s_min"] = c.protocol.s_min
        r["insertions"] = c.workload.insertions
        r["norm"] = analysis.norm_overhead(r["ins_per_op"], r["lookup_per_op"], lir)
        r["storage_per_ins"] = r["replicas_mean"]
    res = SuiteResult("servers", rows)
    res.tables["norm"] = _table(rows, ["s_min", "insertions", "protocol"],
                                ["norm", "ins_per_op", "lookup_per_op", "storage_per_ins", "success"])
    means = {s: cell_mean(rows, "norm", s_min=s) for s in s_values}
    best = min(means, key=means.get)
    res.checks.append(Check("servers: normalized overhead minimized at a small server count",
                            best <= 4, f"argmin S_min = {best}; means {fmt_map(means)}"))
    res.runtime = time.perf_counter() - t0
    return res


def regions_rows(seeds: int = 5, regions=(4, 9, 16, 25), workers: int = 1) -> list[dict]:
    cfgs = []
    for ts, rs in seed_pairs(seeds):
        for R in regions:
            cfgs.append(seeded(_base(**{"protocol.name": "rr", "grid.regions": R}), ts, rs))
        for name in ("ght", "ght_star"):
            cfgs.append(seeded(_base(**{"protocol.name": name, "grid.regions": regions[0]}), ts, rs))
    rows = run_cells(cfgs, workers)
    out = []
    for r in rows:
        if r["protocol"] == "rr":
            out.append(r)
        else:  # GHT does not use the grid; replicate its run across the R axis
            for R in regions:
                out.append({**r, "R": R})
    return out


def lir_curves(rows: list[dict], regions, l_rates=(2.0,), lirs=LIR_GRID) -> list[dict]:
    """Normalized total overhead per second across LIR (both formula forms)."""
    out = []
    for R in regions:
        for lr in l_rates:
            for lir in lirs:
                rec = {"R": R, "lookup_rate": lr, "LIR": lir}
                for scheme in ("rr", "ght", "ght_star"):
                    ins = cell_mean(rows, "ins_per_op", protocol=scheme, R=R)
                    look = cell_mean(rows, "lookup_per_op", protocol=scheme, R=R)
                    per = cell_mean(rows, "periodic_rate", protocol=scheme, R=R)
                    rec[f"{scheme}_printed"] = analysis.norm_total_per_sec(ins, look, lr, lr, per, 1.0, lir, "printed")
                    rec[f"{scheme}_conventional"] = analysis.norm_total_per_sec(ins, look, lr / lir, lr, per, 1.0,
                                                                              form="conventional")
                rec["rr_minus_ght_star"] = rec["rr_printed"] - rec["ght_star_printed"]
                rec["ratio_rr_ght"] = rec["rr_printed"] / rec["ght_printed"]
                rec["ratio_rr_ght_star"] = rec["rr_printed"] / rec["ght_star_printed"]
                out.append(rec)
    return out


def crossover(curve: list[dict], key: str = "ratio_rr_ght_star") -> float | None:
    """LIR where ``key`` crosses 1 (log-linear interpolation), or None."""
    pts = sorted((c["LIR"], c[key]) for c in curve)
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if (y0 - 1.0) * (y1 - 1.0) <= 0 and y0 != y1:
            f = (1.0 - y0) / (y1 - y0)
            return float(math.exp(math.log(x0) + f * (math.log(x1) - math.log(x0))))
    return None


def suite_regions(seeds: int = 5, regions=(4, 9, 16, 25), workers: int = 1, lir_region: int = 16) -> SuiteResult:
    t0 = time.perf_counter()
    rows = regions_rows(seeds, regions, workers)
    res = SuiteResult("regions", rows)
    res.tables["overhead"] = _table(rows, ["R", "protocol"], [
        "ins_per_op", "lookup_per_op", "periodic_msgs", "periodic_rate", "replicas_mean", "success"])
    curves = lir_curves(rows, regions, l_rates=(0.5, 1.0, 2.0, 4.0))
    cols = ["R", "lookup_rate", "LIR", "rr_printed", "ght_printed", "ght_star_printed", "rr_conventional",
            "ght_conventional", "ght_star_conventional", "rr_minus_ght_star", "ratio_rr_ght", "ratio_rr_ght_star"]
    res.tables["lir"] = (cols, [c for c in curves if c["lookup_rate"] == 2.0])
    res.tables["ratio"] = (["R", "lookup_rate", "LIR", "ratio_rr_ght", "ratio_rr_ght_star"], curves)
    res.checks += check_static_correctness(rows)
    res.checks += check_storage_law(rows)
    res.checks += check_region_trend(rows, regions)
    res.checks += check_lir(curves, lir_region)
    res.runtime = time.perf_counter() - t0
    return res


def check_static_correctness(rows) -> list[Check]:
    out = []
    for scheme in ("rr", "ght"):
        sel = [r for r in rows if r["protocol"] == scheme]
        worst = min(r["success"] for r in sel)
        slow = max(r["runtime"] for r in sel)
        out.append(Check(f"C1 static success {scheme}", worst >= 0.99 and slow < 10.0,
                         f"min success {worst:.4f} (>= 0.99), max runtime {slow:.2f} s (< 10 s)"))
    return out


def check_storage_law(rows) -> list[Check]:
    star = cell_mean(rows, "replicas_mean", protocol="ght_star")
    plain = cell_mean(rows, "replicas_mean", protocol="ght")
    out = [Check("C3 GHT* replicas in [5, 12], GHT larger", 5 <= star <= 12 and plain > star,
                 f"GHT* {star:.2f}, GHT {plain:.2f}")]
    obs, exp, var, low_ok = [], [], [], True
    for r in rows:
        if r["protocol"] != "rr":
            continue
        p0 = analysis.election_p0(3, r["R"], r["n"])
        for pop, srv in r["_regions"]:
            d = analysis.elected_count_distribution(pop, 3, p0)
            k = np.arange(len(d))
            mu = float(k @ d)
            obs.append(srv)
            exp.append(mu)
            var.append(float(((k - mu) ** 2) @ d))
        low_ok &= r["replicas_min"] >= min(3, min((p for p, _ in r["_regions"]), default=3))
    if obs:
        o, e = float(np.mean(obs)), float(np.mean(exp))
        se = math.sqrt(sum(var)) / len(var)
        ok = low_ok and 3 <= o <= e + 3 * se
        out.append(Check("C3 RR replicas between S_min and S_min + expected overshoot", ok,
                         f"observed {o:.2f} servers/region vs expected {e:.2f} (+3 SE = {e + 3 * se:.2f}); "
                         f"floor {'met' if low_ok else 'violated'}"))
    return out


def check_region_trend(rows, regions) -> list[Check]:
    ins = [cell_mean(rows, "ins_per_op", protocol="rr", R=R) for R in regions]
    mono = all(b <= a for a, b in zip(ins, ins[1:]))
    rr_l = [cell_mean(rows, "lookup_per_op", protocol="rr", R=R) for R in regions]
    gs_l = cell_mean(rows, "lookup_per_op", protocol="ght_star")
    return [
        Check("C5 RR insertion overhead non-increasing in R", mono,
              "R->ins/op " + ", ".join(f"{R}:{v:.1f}" for R, v in zip(regions, ins))),
        Check("C5 RR lookup overhead < GHT* at every R", all(v < gs_l for v in rr_l),
              "RR " + ", ".join(f"{R}:{v:.1f}" for R, v in zip(regions, rr_l)) + f" vs GHT* {gs_l:.1f}"),
    ]


def check_lir(curves, R: int) -> list[Check]:
    sel = [c for c in curves if c["R"] == R and c["lookup_rate"] == 2.0]
    x = crossover(sel)
    at10 = next(c["ratio_rr_ght_star"] for c in sel if c["LIR"] == 10.0)
    return [Check(f"C9 RR/GHT* crossover in (0.05, 1) and ratio <= 0.5 at LIR=10 (R={R})",
                  x is not None and 0.05 < x < 1.0 and at10 <= 0.5,
                  f"crossover LIR {x if x is None else round(x, 3)}, ratio at 10 = {at10:.3f}")]


def suite_failures(seeds: int = 5, fractions=(0.1, 0.3, 0.5), regions=(4, 9, 16, 25), workers: int = 1) -> SuiteResult:
    t0 = time.perf_counter()
    cfgs = []
    for f in fractions:
        for ts, rs in seed_pairs(seeds):
            for R in regions:
                cfgs.append(seeded(_base(**{"protocol.name": "rr", "grid.regions": R,
                                            "dynamics.failure_fraction": f}), ts, rs))
            cfgs.append(seeded(_base(**{"protocol.name": "ght", "dynamics.failure_fraction": f}), ts, rs))
    rows = run_cells(cfgs, workers)
    out = []
    for r, c in zip(rows, cfgs):
        r["failure_fraction"] = c.dynamics.failure_fraction
        if r["protocol"] == "ght":
            out += [{**r, "R": R} for R in regions]
        else:
            out.append(r)
    res = SuiteResult("failures", out)
    res.tables["success"] = _table(out, ["failure_fraction", "R", "protocol"],
                                   ["success", "ins_per_op", "lookup_per_op", "periodic_msgs"])
    res.checks += check_failures(out, regions)
    res.runtime = time.perf_counter() - t0
    return res


def check_failures(rows, regions) -> list[Check]:
    out = []
    for scheme in ("rr", "ght"):
        vals = {R: cell_mean(rows, "success", protocol=scheme, R=R, failure_fraction=0.5) for R in regions if R <= 16}
        out.append(Check(f"C6 {scheme} success >= 0.90 at 50% failures, R <= 16",
                         all(v >= 0.90 for v in vals.values()), fmt_map(vals)))
    return out


def mobility_cfg(name: str, R: int, speed: float, pause: float = 0.0) -> ScenarioConfig:
    over = {"protocol.name": name, "grid.regions": R, "dynamics.max_speed": speed, "dynamics.pause_time": pause}
    if name != "rr":
        over["protocol.replanarize_interval"] = 2.0
    return _base(**over)


def suite_mobility(seeds: int = 5, speeds=(1.0, 2.0, 5.0), regions=(4, 9, 16, 25), pauses=(0.0, 20.0, 50.0, 100.0),
                   workers: int = 1, include_pause: bool = True) -> SuiteResult:
    t0 = time.perf_counter()
    cfgs = []
    for v in speeds:
        for ts, rs in seed_pairs(seeds):
            for R in regions:
                cfgs.append(seeded(mobility_cfg("rr", R, v), ts, rs))
            for name in ("ght", "ght_star"):
                cfgs.append(seeded(mobility_cfg(name, 9, v), ts, rs))
    if include_pause:
        for p in pauses:
            if p == 0.0:
                continue
            for ts, rs in seed_pairs(seeds):
                for name in ("rr", "ght", "ght_star"):
                    cfgs.append(seeded(mobility_cfg(name, 9, 5.0, p), ts, rs))
    rows = run_cells(cfgs, workers)
    out = []
    for r, c in zip(rows, cfgs):
        r["speed"] = c.dynamics.max_speed
        r["pause"] = c.dynamics.pause_time
        r["mobility_per_10s"] = r["mobility_rate"] * 10.0
        r["refresh_per_10s"] = r["periodic_rate"] * 10.0
        if r["protocol"] != "rr":
            out += [{**r, "R": R} for R in regions] if r["pause"] == 0.0 else [r]
        else:
            out.append(r)
    res = SuiteResult("mobility", out)
    speed_rows = [r for r in out if r["pause"] == 0.0]
    res.tables["speed"] = _table(speed_rows, ["speed", "R", "protocol"],
                                 ["success", "ins_per_op", "lookup_per_op", "mobility_per_10s", "refresh_per_10s",
                                  "ttl_drops"])
    if include_pause:
        pause_rows = [r for r in out if r["R"] == 9 and r["speed"] == 5.0]
        res.tables["pause"] = _table(pause_rows, ["pause", "protocol"], ["success", "lookup_per_op", "ttl_drops"])
    res.checks += check_mobility(out)
    res.runtime = time.perf_counter() - t0
    return res


def check_mobility(rows) -> list[Check]:
    rr = cell_mean(rows, "success", protocol="rr", R=9, speed=5.0, pause=0.0)
    mob = cell_mean(rows, "mobility_per_10s", protocol="rr", R=9, speed=5.0, pause=0.0)
    ref = cell_mean(rows, "refresh_per_10s", protocol="ght", R=9, speed=5.0, pause=0.0)
    return [
        Check("C7 RR success >= 0.95 at 5 m/s, R=9", rr >= 0.95, f"{rr:.4f}"),
        Check("C7 RR mobility updates per 10 s < 25% of GHT refresh per interval", mob < 0.25 * ref,
              f"RR {mob:.1f} vs GHT {ref:.1f} ({mob / ref:.1%})" if ref else "no GHT refresh traffic"),
    ]


def inaccuracy_cfg(name: str, R: int, err: float) -> ScenarioConfig:
    return _base(**{"protocol.name": name, "grid.regions": R, "topology.n": 1000, "mode": "high_level",
                    "workload.insertions": 10, "workload.lookups": 100, "duration": 60.0,
                    "dynamics.error_fraction": err})


def suite_inaccuracy(runs: int = 100, errors=(0.2, 0.4, 0.6, 0.8, 1.0), regions=(16, 36, 64), workers: int = 1,
                     low_errors=(), trend_runs: int | None = None) -> SuiteResult:
    """Routing-level (ideal radio) success under location error on 1000 nodes.

    The 60%-error cell for RR(36) and GHT always gets ``runs`` runs; other
    cells get ``trend_runs`` (default ``runs``).
    """
    t0 = time.perf_counter()
    trend_runs = runs if trend_runs is None else trend_runs
    cfgs = []
    for err in tuple(low_errors) + tuple(errors):
        for R in regions:
            k_runs = runs if (R == 36 and abs(err - 0.6) < 1e-9) else trend_runs
            cfgs += [seeded(inaccuracy_cfg("rr", R, err), ts, rs) for ts, rs in seed_pairs(k_runs)]
        k_runs = runs if abs(err - 0.6) < 1e-9 else trend_runs
        cfgs += [seeded(inaccuracy_cfg("ght", 16, err), ts, rs) for ts, rs in seed_pairs(k_runs)]
    rows = run_cells(cfgs, workers)
    for r, c in zip(rows, cfgs):
        r["error"] = c.dynamics.error_fraction
        r["scheme"] = "ght" if r["protocol"] == "ght" else f"rr{r['R']}"
    res = SuiteResult("inaccuracy", rows)
    res.tables["success"] = _table(rows, ["error", "scheme"], ["success", "not_found", "ttl_drops"])
    res.checks += check_inaccuracy(rows, tuple(low_errors) + tuple(errors), regions)
    res.runtime = time.perf_counter() - t0
    return res


def check_inaccuracy(rows, errors, regions) -> list[Check]:
    rr = cell_mean(rows, "success", scheme="rr36", error=0.6)
    gh = cell_mean(rows, "success", scheme="ght", error=0.6)
    out = [Check("C8 at 60% error: RR(36) >= 0.90, GHT <= 0.75, gap >= 15 points",
                 rr >= 0.90 and gh <= 0.75 and rr - gh >= 0.15, f"RR(36) {rr:.4f}, GHT {gh:.4f}, gap {rr - gh:.4f}")]
    bad = []
    for err in errors:
        vals = [cell_mean(rows, "success", scheme=f"rr{R}", error=err) for R in sorted(regions)]
        # fewer regions = larger regions; success must not increase with R
        for (Ra, a), (Rb, b) in zip(zip(sorted(regions), vals), list(zip(sorted(regions), vals))[1:]):
            if b > a:
                bad.append(f"err {err}: R={Ra} {a:.3f} < R={Rb} {b:.3f}")
    out.append(Check("C8 larger regions never worse at fixed error", not bad, "; ".join(bad) or "monotone"))
    return out


def scaling_cfg(name: str, n: int, model: str = "service") -> ScenarioConfig:
    over = {"protocol.name": name, "topology.n": n, "topology.region_population": 100, "mode": "high_level"}
    if model == "service":
        over.update({"workload.insertions": 10, "workload.lookups": 100, "duration": 80.0})
    else:
        over.update({"workload.model": "event", "duration": 60.0})
    return _base(**over)


def suite_scaling(seeds: int = 5, ns=(100, 1000, 10000), workers: int = 1, model: str = "service") -> SuiteResult:
    t0 = time.perf_counter()
    schemes = ("rr", "ght", "centralized", "flooding")
    cfgs = [seeded(scaling_cfg(s, n, model), ts, rs) for n in ns for s in schemes for ts, rs in seed_pairs(seeds)]
    rows = run_cells(cfgs, workers)
    name = "scaling" if model == "service" else "event"
    res = SuiteResult(name, rows)
    for r in rows:
        r["total"] = r["total_msgs"]
    res.tables["overhead"] = _table(rows, ["n", "protocol"], ["total", "hotspot", "success"])
    calc = []
    for n in ns:
        R = scaling_cfg("rr", n, model).region_count()
        ins = 10 if model == "service" else 1000
        looks = 100 if model == "service" else 50
        m = analysis.OverheadModel(n, ins, looks, R, 3)
        for s in schemes:
            est = analysis.asymptotic_costs(m, s)
            calc.append({"scheme": s, "n": n, "total": est.total, "hotspot": est.hotspot})
    res.tables["model"] = (["scheme", "n", "total", "hotspot"], calc)
    res.checks += check_scaling(rows, ns) if model == "service" else check_event(rows, ns)
    res.runtime = time.perf_counter() - t0
    res.checks.append(Check(f"{name} suite runtime < 10 minutes", res.runtime < 600, f"{res.runtime:.1f} s"))
    return res


def check_scaling(rows, ns) -> list[Check]:
    out = []
    hot_ok, hot_detail = True, []
    for n in ns:
        h = {s: cell_mean(rows, "hotspot", protocol=s, n=n) for s in ("rr", "ght", "centralized")}
        hot_ok &= h["rr"] < h["ght"] < h["centralized"]
        hot_detail.append(f"n={n}: " + fmt_map(h))
    out.append(Check("C10 hotspot RR < GHT < centralized", hot_ok, "; ".join(hot_detail)))
    fl_ok, fl_detail = True, []
    for n in ns:
        t = {s: cell_mean(rows, "total_msgs", protocol=s, n=n) for s in ("rr", "ght", "centralized", "flooding")}
        worst = t["flooding"] / max(t["rr"], t["ght"], t["centralized"])
        fl_ok &= worst >= 10.0
        fl_detail.append(f"n={n}: flooding/max(others) = {worst:.2f}")
    out.append(Check("C10 flooding total >= 10x every other scheme", fl_ok, "; ".join(fl_detail)))
    return out


def check_event(rows, ns) -> list[Check]:
    ratios = [cell_mean(rows, "total_msgs", protocol="rr", n=n) / cell_mean(rows, "total_msgs", protocol="ght", n=n)
              for n in ns]
    dec = all(b < a for a, b in zip(ratios, ratios[1:]))
    toward_one = all(r >= 1.0 - 0.25 for r in ratios) and abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)
    return [Check("C11 event model: RR > GHT at smallest n, RR/GHT decreasing toward 1",
                  ratios[0] > 1.0 and dec and toward_one,
                  ", ".join(f"n={n}: {r:.3f}" for n, r in zip(ns, ratios)))]


def suite_event(seeds: int = 5, ns=(100, 1000, 10000), workers: int = 1) -> SuiteResult:
    return suite_scaling(seeds, ns, workers, model="event")


def suite_gaps(seeds: int = 5, n: int = 100, density_scale: float = 0.5, regions: int = 16,
               workers: int = 1) -> SuiteResult:
    """Geocast coverage in sparse fields: plain flood vs GFPG (complete and
    hop-bounded walks), plus RR success with each flavor."""
    from .net import NetConfig, Network
    from .runner import build_world
    from .sim import MetricsReport, RngBank, Simulator
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import breadth_first_order

    t0 = time.perf_counter()
    rows = []
    density = 1.0 / 1024.0 * density_scale
    for ts, rs in seed_pairs(seeds):
        cfg = seeded(_base(**{"topology.n": n, "topology.density": density, "grid.regions": regions}), ts, rs)
        world = build_world(cfg)
        for flavor, factor in (("flood", 0.0), ("gfpg", 0.0), ("gfpg_bounded", 2.0)):
            sim = Simulator()
            metrics = MetricsReport(n)
            net = Network(sim, world, metrics, RngBank(rs), NetConfig(ideal=True, gfpg_budget_factor=factor))
            adj = net._adjacency()
            r_idx = np.concatenate([np.full(len(a), i) for i, a in enumerate(adj)]) if n else np.zeros(0)
            graph = csr_matrix((np.ones(len(r_idx)), (r_idx, np.concatenate(adj))), shape=(n, n))
            covered, expected, msgs, casts = 0, 0, 0, 0
            for region in range(world.grid.R):
                members = world.nodes_in_region(region)
                if not members:
                    continue
                f = members[0]
                reach = breadth_first_order(graph, f, directed=False, return_predecessors=False)
                target = {int(v) for v in reach if world.nodes[v].current_region == region}
                before = metrics.total()
                st = net.geocast(f, net.new_packet("probe", "insertion", f, region=region), region,
                                 "flood" if flavor == "flood" else "gfpg")
                sim.run()
                covered += len(set(st.receivers) & target)
                expected += len(target)
                msgs += metrics.total() - before
                casts += 1
            rows.append({"seed": ts, "flavor": flavor, "coverage": covered / max(expected, 1),
                         "msgs_per_geocast": msgs / max(casts, 1)})
    succ_cfgs = []
    for flavor in ("flood", "gfpg"):
        for ts, rs in seed_pairs(seeds):
            succ_cfgs.append(seeded(_base(**{"topology.n": n, "topology.density": density, "grid.regions": regions,
                                            "protocol.geocast": flavor}), ts, rs))
    srows = run_cells(succ_cfgs, workers)
    for r, c in zip(srows, succ_cfgs):
        r["flavor"] = c.protocol.geocast
    res = SuiteResult("gaps", rows + srows)
    res.tables["coverage"] = _table(rows, ["flavor"], ["coverage", "msgs_per_geocast"])
    res.tables["rr"] = _table(srows, ["flavor"], ["success", "ins_per_op", "lookup_per_op"])
    cov = cell_mean(rows, "coverage", flavor="gfpg")
    res.checks.append(Check("gaps: GFPG reaches every connected in-region node", cov == 1.0, f"coverage {cov:.4f}"))
    res.runtime = time.perf_counter() - t0
    return res


def empty_region_setup(region: int, refill_at: float | None = None):
    """Scripted intervention: empty ``region`` before start, optionally move one
    node back into its center at ``refill_at``."""

    def setup(res: RunResult) -> None:
        world, grid = res.world, res.world.grid
        x0, y0, x1, y1 = grid.rect(region)
        rng = np.random.default_rng(region + 7)
        for v in world.nodes_in_region(region, alive_only=False):
            while True:
                p = (rng.random() * world.bounds.width, rng.random() * world.bounds.height)
                if grid.region_of(world.bounds.clamp(p)) != region:
                    break
            world.nodes[v].true_pos = world.bounds.clamp(p)
            world.nodes[v].err_offset = (0.0, 0.0)
        world.refresh()
        if refill_at is not None:
            def refill():
                # the farthest node holding no server role moves in
                cx, cy = grid.center(region)
                busy = set(getattr(res.protocol, "servers", {}))
                idle = [i for i in range(world.n) if i not in busy and world.nodes[i].alive]
                far = max(idle, key=lambda i: math.hypot(world.nodes[i].true_pos[0] - cx,
                                                         world.nodes[i].true_pos[1] - cy))
                world.move_node(far, (cx, cy))
                res.metrics.notes["refill_node"] = far
            res.sim.schedule_at(refill_at, refill)

    return setup


def suite_empty_regions(seeds: int = 5, regions: int = 16, refill_at: float = 60.0) -> SuiteResult:
    """Keys of an emptied region live on proxies; a node moved in later takes
    them over within one failure-check interval."""
    from .world import hash_key_to_region

    t0 = time.perf_counter()
    rows = []
    for ts, rs in seed_pairs(seeds):
        cfg = seeded(_base(**{"grid.regions": regions, "duration": 200.0}), ts, rs)
        probe = run_scenario(cfg.with_(**{"workload.lookups": 0, "duration": 10.0}))
        keys = [o.key for o in probe.workload if o.kind == "insert"]
        counts = {}
        for key in keys:
            r = hash_key_to_region(key, probe.world.grid)
            counts[r] = counts.get(r, 0) + 1
        target = max(counts, key=counts.get)
        res = run_scenario(cfg, setup=empty_region_setup(target, refill_at))
        proto = res.protocol
        node = res.metrics.notes.get("refill_node")
        moved = sum(1 for key in keys if hash_key_to_region(key, res.world.grid) == target
                    and node is not None and node in proto.servers
                    and key in proto.servers[node].store)
        lookups_target = [o for o in res.workload if o.kind == "lookup" and
                          hash_key_to_region(o.key, res.world.grid) == target]
        settle = refill_at + cfg.protocol.check_interval + 2.0
        before = [o.success for o in res.metrics.lookup_outcomes if o.issued_at < refill_at]
        after = [o.success for o in res.metrics.lookup_outcomes if o.issued_at >= settle]
        row = record(res)
        row.update(target=target, target_keys=counts[target], migrated_keys=moved,
                   target_lookups=len(lookups_target), success_proxy=float(np.mean(before)) if before else 1.0,
                   success_settled=float(np.mean(after)) if after else 1.0)
        rows.append(row)
    res_s = SuiteResult("empty_regions", rows)
    res_s.tables["result"] = _table(rows, ["protocol"], ["success", "success_proxy", "success_settled",
                                                         "target_keys", "migrated_keys", "target_lookups"])
    # between the refill and the next proxy probe the new node answers NOT_FOUND
    pre, post = cell_mean(rows, "success_proxy"), cell_mean(rows, "success_settled")
    res_s.checks.append(Check("empty regions: lookups succeed via proxies, and again once migrated",
                              pre >= 0.99 and post >= 0.99, f"before refill {pre:.4f}, after settling {post:.4f}"))
    mig = all(r["migrated_keys"] == r["target_keys"] for r in rows)
    res_s.checks.append(Check("empty regions: records migrate to the refilled region", mig,
                              ", ".join(f"{r['migrated_keys']}/{r['target_keys']}" for r in rows)))
    res_s.runtime = time.perf_counter() - t0
    return res_s


def fmt_map(d: dict) -> str:
    return ", ".join(f"{k}: {v:.3f}" if isinstance(v, float) else f"{k}: {v}" for k, v in d.items())


def run_suite(name: str, out_dir: str | None = None, workers: int = 1, **kwargs) -> SuiteResult:
    fn = {
        "servers": suite_servers,
        "regions": suite_regions,
        "failures": suite_failures,
        "mobility": suite_mobility,
        "inaccuracy": suite_inaccuracy,
        "scaling": suite_scaling,
        "event": suite_event,
        "gaps": suite_gaps,
        "empty_regions": suite_empty_regions,
    }.get(name)
    if fn is None:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if name not in ("gaps", "empty_regions") and "workers" not in kwargs:
        kwargs["workers"] = workers
    res = fn(**kwargs)
    if out_dir is not None:
        emit_csv(res, out_dir)
    return res
