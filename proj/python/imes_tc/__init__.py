"""Transactive control of interconnected multi-energy systems."""

from ._core import (
    MesError,
    Mode,
    Protocol,
    Scenario,
    ScenarioError,
    SimRun,
    bisection_iteration_cap,
    case_two,
    compare_protocols,
    random_case,
    read_scenario,
    run_day,
    write_scenario,
)

__all__ = [
    "MesError",
    "Mode",
    "Protocol",
    "Scenario",
    "ScenarioError",
    "SimRun",
    "bisection_iteration_cap",
    "case_two",
    "compare_protocols",
    "random_case",
    "read_scenario",
    "run_day",
    "write_scenario",
]
