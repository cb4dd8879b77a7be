"""Command line: ``rrsim run``, ``rrsim suite``, ``rrsim calc``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import analysis, suites
from .runner import run_scenario
from .scenario import ScenarioConfig, ScenarioError, format_scenario, parse_scenario, validate


def _load(path: str | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def cmd_run(args) -> int:
    try:
        cfg = _load(args.scenario)
        over = {}
        for item in args.set or []:
            key, _, value = item.partition("=")
            over[key.strip()] = value.strip()
        if over:
            cfg = parse_scenario(format_scenario(cfg) + "\n" + "\n".join(f"{k} = {v}" for k, v in over.items()))
        if args.seed is not None:
            cfg = cfg.with_(**{"seed": args.seed})
        if args.mode is not None:
            cfg = cfg.with_(**{"mode": args.mode})
        problems = validate(cfg)
        if problems:
            raise ScenarioError(problems)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    if args.trace:
        def setup(res):
            res.sim.trace = []

        res = run_scenario(cfg, setup=setup)
    else:
        res = run_scenario(cfg)
    summary = res.summary()
    text = json.dumps(summary, indent=2, sort_keys=True, default=str)
    print(text)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "run_summary.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        with open(os.path.join(args.out_dir, "run_metrics.json"), "w", encoding="utf-8") as fh:
            fh.write(res.metrics.to_json() + "\n")
        with open(os.path.join(args.out_dir, "scenario.txt"), "w", encoding="utf-8") as fh:
            fh.write(format_scenario(cfg))
        if args.trace and res.sim.trace is not None:
            with open(os.path.join(args.out_dir, "event_trace.csv"), "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["time", "seq"])
                w.writerows(res.sim.trace)
    return 0


def cmd_suite(args) -> int:
    suites.configure_seeding(args.seed or 0, args.runs_per_topology, args.mode)
    kwargs = {}
    if args.seeds is not None:
        if args.name == "inaccuracy":
            kwargs["runs"] = args.seeds
        else:
            kwargs["seeds"] = args.seeds
    if args.name == "scaling" and args.big:
        kwargs["ns"] = (100, 1000, 10000, 100000)
    try:
        res = suites.run_suite(args.name, out_dir=args.out_dir, workers=args.workers, **kwargs)
    except suites.SuiteAborted as exc:
        print(f"suite {args.name} aborted: {exc}", file=sys.stderr)
        return 1
    print(res.summary(), end="")
    return 0 if res.passed else 1


def cmd_calc(args) -> int:
    rows = []
    for n in args.n:
        R = args.regions if args.regions else max(1, round(n / args.region_population))
        model = analysis.OverheadModel(n, args.insertions, args.lookups, R, args.servers)
        for scheme in analysis.SCHEMES:
            est = analysis.asymptotic_costs(model, scheme)
            rows.append({"scheme": scheme, "n": n, "total": f"{est.total:.6g}", "hotspot": f"{est.hotspot:.6g}"})
    out = sys.stdout
    fh = None
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        fh = out = open(os.path.join(args.out_dir, "calc.csv"), "w", newline="", encoding="utf-8")
    try:
        w = csv.DictWriter(out, fieldnames=["scheme", "n", "total", "hotspot"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if fh is not None:
            fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rrsim", description="Rendezvous-region storage simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="run seed (suite: seed offset)")
        p.add_argument("--out-dir", default=None, help="directory for CSV/JSON output")
        p.add_argument("--mode", choices=("detailed", "high_level"), default=None)

    r = sub.add_parser("run", help="run a single scenario")
    r.add_argument("scenario", nargs="?", help="scenario file (key = value lines); defaults if omitted")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a field, e.g. grid.regions=9")
    r.add_argument("--trace", action="store_true", help="also write the processed-event trace")
    common(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("suite", help="run a named experiment suite")
    s.add_argument("name", choices=suites.SUITES)
    s.add_argument("--seeds", type=int, default=None, help="topologies per cell (inaccuracy: runs)")
    s.add_argument("--runs-per-topology", type=int, default=1, help="workload runs per topology (5 gives 5 x 5)")
    s.add_argument("--workers", type=int, default=1, help="worker processes")
    s.add_argument("--big", action="store_true", help="scaling: add the n = 100000 point")
    common(s)
    s.set_defaults(func=cmd_suite)

    c = sub.add_parser("calc", help="asymptotic overhead table as CSV")
    c.add_argument("--n", type=int, nargs="+", default=[100, 1000, 10000])
    c.add_argument("--insertions", type=int, default=10)
    c.add_argument("--lookups", type=int, default=100)
    c.add_argument("--regions", type=int, default=0, help="fixed region count (default: n / region population)")
    c.add_argument("--region-population", type=int, default=100)
    c.add_argument("--servers", type=float, default=3.0)
    common(c)
    c.set_defaults(func=cmd_calc)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
