"""
Scenario router: dispatches a validated config to its scenario function.

Maps scenario name strings to runner functions. A runner takes
(config, report) and fills the report with checks and tables.
"""

import logging

from .errors import ConfigError

logger = logging.getLogger("scenario_layer.router")


class ScenarioRouter:
    """Routes scenario configs to registered runner functions."""

    def __init__(self):
        self._handlers = {}

    def register(self, scenario_name, handler_func):
        """Register a runner for a scenario name.

        Args:
            scenario_name: Scenario identifier (e.g., "kahler_check").
            handler_func: Callable(config, report) -> None.
        """
        self._handlers[scenario_name] = handler_func
        logger.debug(f"Registered runner for '{scenario_name}'")

    def register_many(self, handlers_dict):
        for name, func in handlers_dict.items():
            self.register(name, func)

    def dispatch(self, config, report):
        """Run the scenario named by config.name into report."""
        handler = self._handlers.get(config.name)
        if not handler:
            available = ", ".join(sorted(self._handlers))
            raise ConfigError(f"No runner for scenario '{config.name}'. Available: {available}", key="name")
        handler(config, report)
        return report

    def list_scenarios(self):
        return sorted(self._handlers)
