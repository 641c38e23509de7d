from tccsim.scenario.dsl import Scenario, parse_scenario
from tccsim.scenario.runner import ScenarioReport, ScenarioRunner, run_scenario
from tccsim.scenario.suite import builtin_suite

__all__ = [
    "Scenario",
    "ScenarioReport",
    "ScenarioRunner",
    "builtin_suite",
    "parse_scenario",
    "run_scenario",
]
