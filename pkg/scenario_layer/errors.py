"""Errors raised by the scenario layer."""


class ConfigError(Exception):
    """A scenario config file that cannot be parsed or fails validation."""

    def __init__(self, message, line=None, key=None):
        self.message = message
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class OutputError(Exception):
    """An output artifact could not be written."""

    def __init__(self, message, path):
        self.path = str(path)
        super().__init__(f"{message}: {self.path}")
