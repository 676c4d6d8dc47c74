"""
Validation and coercion for scenario config values.

Unknown names get a "did you mean" suggestion from difflib; raw strings are
coerced according to CONFIG_SCHEMA and range-checked before any scenario
runs.
"""

import difflib

from probability_geometry.dynamics import HAMILTONIANS, INTEGRATORS
from probability_geometry.grid import BOUNDARY_MODES, FIRST_DERIVATIVE_WEIGHTS, SCHEMES

from .errors import ConfigError
from .scenarios import SCENARIOS

STATE_FAMILIES = ("gaussian", "periodic_gaussian", "wrapped_gaussian", "uniform", "random", "csv")

# section -> key -> kind. Kinds: int, float, str, bool, floats, ints, or a tuple of choices.
CONFIG_SCHEMA = {
    "scenario": {"name": "str", "seed": "int", "output_dir": "str", "samples": "int"},
    "grid": {
        "dim": "int",
        "extent": "floats",
        "points": "ints",
        "lower": "floats",
        "boundary": BOUNDARY_MODES,
        "scheme": SCHEMES,
        "stencil_order": "int",
    },
    "physics": {"mass": "float", "alpha": "float", "time": "float"},
    "initial_state": {
        "family": STATE_FAMILIES,
        "center": "floats",
        "sigma": "float",
        "momentum": "floats",
        "path": "str",
    },
    "evolution": {
        "hamiltonian": HAMILTONIANS,
        "integrator": INTEGRATORS,
        "dt": "float",
        "steps": "int",
        "horizon": "float",
        "save_every": "int",
        "cfl": "float",
        "refinement": "bool",
    },
}

REQUIRED_KEYS = {"scenario": ("name",), "physics": ("mass", "alpha")}

TRUE_WORDS = ("true", "yes", "on", "1")
FALSE_WORDS = ("false", "no", "off", "0")


def suggest(name, candidates, what):
    """Error text for an unknown name, with the closest candidates."""
    matches = difflib.get_close_matches(name, list(candidates), n=3, cutoff=0.4)
    if matches:
        return f"Unknown {what} '{name}'. Did you mean '{matches[0]}'?"
    return f"Unknown {what} '{name}'. Available: {', '.join(candidates)}"


def validate_section(section, line=None):
    normalized = section.strip().lower()
    if normalized not in CONFIG_SCHEMA:
        raise ConfigError(suggest(normalized, CONFIG_SCHEMA, "section"), line=line, key=section)
    return normalized


def normalize_name(text):
    """'Kahler-Check ' -> 'kahler_check'."""
    return text.strip().lower().replace("-", "_").replace(" ", "_")


def validate_key(section, key, line=None):
    normalized = normalize_name(key)
    if normalized not in CONFIG_SCHEMA[section]:
        raise ConfigError(suggest(normalized, CONFIG_SCHEMA[section], f"key in [{section}]"), line=line, key=key)
    return normalized


def validate_scenario_name(name, line=None):
    normalized = normalize_name(name)
    if normalized not in SCENARIOS:
        raise ConfigError(suggest(normalized, SCENARIOS, "scenario"), line=line, key="name")
    return normalized


def coerce_value(section, key, raw, line=None):
    """Convert a raw config string to the schema type of section.key."""
    kind = CONFIG_SCHEMA[section][key]
    text = raw.strip()
    label = f"{section}.{key}"
    try:
        if isinstance(kind, tuple):
            canonical = {choice.lower(): choice for choice in kind}
            if text.lower() not in canonical:
                raise ConfigError(suggest(text, kind, f"value for {label}"), line=line, key=label)
            return canonical[text.lower()]
        if kind == "str":
            return text
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "bool":
            lowered = text.lower()
            if lowered in TRUE_WORDS:
                return True
            if lowered in FALSE_WORDS:
                return False
            raise ValueError(text)
        if kind == "floats":
            return tuple(float(part) for part in text.split(","))
        if kind == "ints":
            return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"{label} = '{text}' is not a valid {kind}", line=line, key=label) from None
    raise ConfigError(f"{label} has unsupported kind {kind}", line=line, key=label)


def require_positive(value, label, line=None):
    if not value > 0:
        raise ConfigError(f"{label} must be positive, got {value}", line=line, key=label)
    return value


def require_at_least(value, minimum, label, line=None):
    if value < minimum:
        raise ConfigError(f"{label} must be at least {minimum}, got {value}", line=line, key=label)
    return value


def validate_stencil_order(order, line=None):
    if order not in FIRST_DERIVATIVE_WEIGHTS:
        raise ConfigError(
            f"grid.stencil_order must be one of {sorted(FIRST_DERIVATIVE_WEIGHTS)}, got {order}",
            line=line,
            key="grid.stencil_order",
        )
    return order
