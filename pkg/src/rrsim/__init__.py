"""Rendezvous-region key storage for wireless ad hoc networks, with GHT,
flooding and centralized baselines, on a discrete-event simulator."""

from .analysis import OverheadModel, asymptotic_costs, norm_overhead, norm_total_per_sec
from .runner import RunResult, run_scenario
from .scenario import ScenarioConfig, ScenarioError, format_scenario, gen_workload, parse_scenario
from .sim import MetricsReport, RngBank, RngStream, Simulator
from .suites import SUITES, run_suite
from .world import World, mix64

__all__ = [
    "MetricsReport",
    "OverheadModel",
    "RngBank",
    "RngStream",
    "RunResult",
    "SUITES",
    "ScenarioConfig",
    "ScenarioError",
    "Simulator",
    "World",
    "asymptotic_costs",
    "format_scenario",
    "gen_workload",
    "mix64",
    "norm_overhead",
    "norm_total_per_sec",
    "parse_scenario",
    "run_scenario",
    "run_suite",
]
