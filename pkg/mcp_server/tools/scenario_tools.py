"""
Scenario tools: run, validate and describe probability-geometry scenarios.
"""

import sys
import os
import logging

logger = logging.getLogger("probability_geometry_mcp.scenario_tools")

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from probability_geometry.errors import GeometryError
from scenario_layer.config import load_config
from scenario_layer.errors import ConfigError, OutputError
from scenario_layer.runner import run
from scenario_layer.scenarios import get_scenario, list_scenarios as scenario_table, scenario_defaults
from scenario_layer.validators import validate_scenario_name


def _format_value(value):
    if isinstance(value, tuple):
        return ", ".join(f"{v:g}" if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def register_scenario_tools(mcp):
    """Register scenario tools with the MCP server."""

    @mcp.tool()
    def list_scenarios() -> str:
        """List every scenario the runner knows, with a one-line description."""
        lines = ["Available scenarios:"]
        for name, description in scenario_table():
            lines.append(f"  {name}: {description}")
        return "\n".join(lines)

    @mcp.tool()
    def describe_scenario(name: str) -> str:
        """Show a scenario's description and its default config values.

        Args:
            name: Scenario name, e.g. "gaussian_spread". Use list_scenarios to see options.
        """
        try:
            name = validate_scenario_name(name)
        except ConfigError as e:
            return f"Error: {e}"

        scenario = get_scenario(name)
        lines = [f"{name}: {scenario['description']}", "", "Defaults:"]
        for section, values in scenario_defaults(name).items():
            lines.append(f"  [{section}]")
            for key, value in values.items():
                if value is None or value == "":
                    continue
                lines.append(f"    {key} = {_format_value(value)}")
        lines.append("")
        lines.append("Required in every config: scenario.name, physics.mass, physics.alpha")
        return "\n".join(lines)

    @mcp.tool()
    def validate_scenario_config(config_path: str) -> str:
        """Parse and validate a scenario config file without running it.

        Args:
            config_path: Path to a flat-text config ([section] headers, key = value lines).
        """
        try:
            config = load_config(config_path)
        except ConfigError as e:
            return f"Error: {e}"

        lines = [f"Valid config: {config.description}", f"Output directory: {config.output_dir}"]
        lines.extend(f"  {section}.{key} = {value}" for section, key, value in config.parameters if value != "")
        return "\n".join(lines)

    @mcp.tool()
    def run_scenario(config_path: str) -> str:
        """Run the scenario described by a config file and write its CSV outputs.

        Returns every check with its value, tolerance and PASS/FAIL status.

        Args:
            config_path: Path to a flat-text scenario config file.
        """
        try:
            config = load_config(config_path)
            result = run(config)
        except ConfigError as e:
            return f"Error: config: {e}"
        except (GeometryError, OutputError) as e:
            logger.error(f"Scenario failed: {e}")
            return f"Error: {type(e).__name__}: {e}"

        lines = result.summary_lines()
        lines.append(f"Wrote {len(result.files)} files to {result.output_dir}")
        return "\n".join(lines)
