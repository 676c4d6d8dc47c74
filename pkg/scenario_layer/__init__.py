"""
Scenario layer: config parsing, named experiments and CSV reports.

A scenario is one of the named checks in scenarios.SCENARIOS. A flat-text
config picks the scenario and overrides its defaults; runner.run executes
it and reporting.emit_plotdata writes the results.
"""

from .errors import ConfigError, OutputError
from .config import ScenarioConfig, load_config, parse_config_text
from .scenarios import SCENARIOS, get_scenario, list_scenarios
from .reporting import CheckRecord, RunReport, emit_plotdata
from .runner import RunResult, run, run_file
