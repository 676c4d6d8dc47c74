# MCP tool modules: one register_*_tools(mcp) function per module
from .scenario_tools import register_scenario_tools

__all__ = ["register_scenario_tools"]
