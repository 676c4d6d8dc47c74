"""
Flat-text scenario configuration.

Format:

    # comment
    [scenario]
    name = gaussian_spread
    seed = 0

    [physics]
    mass = 1.0
    alpha = 1.0

Only scenario.name, physics.mass and physics.alpha are required; every other
key falls back to the scenario's defaults table. Vector keys (extent, points,
center, momentum, lower) take comma-separated values; a single value is
broadcast over all axes.

Environment:
    PROBGEO_OUTPUT_DIR  overrides scenario.output_dir; outputs go to $PROBGEO_OUTPUT_DIR/<scenario name>
"""

import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from probability_geometry.dynamics import EvolutionConfig
from probability_geometry.errors import EvolutionError, GridError
from probability_geometry.grid import GridSpec

from .errors import ConfigError
from .scenarios import scenario_defaults
from .validators import (
    CONFIG_SCHEMA,
    REQUIRED_KEYS,
    coerce_value,
    require_at_least,
    require_positive,
    validate_key,
    validate_scenario_name,
    validate_section,
    validate_stencil_order,
)

logger = logging.getLogger("scenario_layer.config")

OUTPUT_DIR_ENV = "PROBGEO_OUTPUT_DIR"
DEFAULT_OUTPUT_ROOT = "probgeo_output"
# p L / (2 pi alpha) must be this close to an integer on periodic grids.
MOMENTUM_QUANTIZATION_TOLERANCE = 1e-6


@dataclass
class RawConfig:
    """Coerced key/value pairs with the line each one came from."""

    source: str
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)
    section_lines: dict = field(default_factory=dict)
    last_line: int = 0

    def line_of(self, section, key=None):
        if key is not None and (section, key) in self.lines:
            return self.lines[(section, key)]
        return self.section_lines.get(section, self.last_line)


@dataclass(frozen=True)
class InitialStateSpec:
    family: str
    center: tuple = None
    sigma: float = 1.0
    momentum: tuple = (0.0,)
    path: str = ""


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    samples: int
    output_dir: Path
    grid: GridSpec
    mass: float
    alpha: float
    time: float
    initial_state: InitialStateSpec
    evolution: EvolutionConfig
    horizon: float
    refinement: bool
    source: str
    parameters: tuple

    @property
    def description(self):
        return f"{self.name} on a {self.grid.describe()}, m={self.mass:g}, alpha={self.alpha:g}, seed={self.seed}"


# === PARSING ===

def parse_config_text(text, source="<string>"):
    """Parse and validate config text into a ScenarioConfig."""
    return build_config(read_raw_config(text, source))


def load_config(path):
    """Read a config file; unreadable files are reported as ConfigError."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {path}: {exc.strerror or exc}") from exc
    logger.debug(f"Loaded config {path}")
    return parse_config_text(text, source=str(path))


def read_raw_config(text, source="<string>"):
    """Split config text into coerced values, tracking line numbers."""
    raw = RawConfig(source=source)
    section = None
    line_number = 0
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue

        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError(f"Malformed section header '{stripped}'", line=line_number)
            section = validate_section(stripped[1:-1], line=line_number)
            if section in raw.section_lines:
                raise ConfigError(f"Section [{section}] appears twice", line=line_number, key=section)
            raw.section_lines[section] = line_number
            raw.values[section] = {}
            continue

        if "=" not in stripped:
            raise ConfigError(f"Expected 'key = value', got '{stripped}'", line=line_number)
        if section is None:
            raise ConfigError("Key outside of any [section]", line=line_number)

        key_text, value_text = stripped.split("=", 1)
        key = validate_key(section, key_text, line=line_number)
        if key in raw.values[section]:
            raise ConfigError(f"Duplicate key {section}.{key}", line=line_number, key=f"{section}.{key}")
        if not value_text.strip():
            raise ConfigError(f"{section}.{key} has no value", line=line_number, key=f"{section}.{key}")
        raw.values[section][key] = coerce_value(section, key, value_text, line=line_number)
        raw.lines[(section, key)] = line_number

    raw.last_line = line_number
    return raw


# === BUILDING ===

def _check_required(raw):
    for section, keys in REQUIRED_KEYS.items():
        for key in keys:
            if key not in raw.values.get(section, {}):
                where = f"section [{section}]" if section in raw.section_lines else f"missing section [{section}]"
                raise ConfigError(
                    f"Required key {section}.{key} is missing ({where})",
                    line=raw.line_of(section),
                    key=f"{section}.{key}",
                )


def _vector(raw, section, key, value, dim):
    if value is None:
        return None
    if len(value) == 1:
        return tuple(value) * dim
    if len(value) != dim:
        raise ConfigError(
            f"{section}.{key} has {len(value)} entries for a {dim}-dimensional grid",
            line=raw.line_of(section, key),
            key=f"{section}.{key}",
        )
    return tuple(value)


def _build_grid(raw, values):
    grid_values = values["grid"]
    dim = grid_values["dim"]
    if not 1 <= dim <= 3:
        raise ConfigError(f"grid.dim must be 1, 2 or 3, got {dim}", line=raw.line_of("grid", "dim"), key="grid.dim")
    validate_stencil_order(grid_values["stencil_order"], line=raw.line_of("grid", "stencil_order"))
    try:
        return GridSpec(
            dim=dim,
            extents=_vector(raw, "grid", "extent", grid_values["extent"], dim),
            points=_vector(raw, "grid", "points", grid_values["points"], dim),
            boundary=grid_values["boundary"],
            lower=_vector(raw, "grid", "lower", grid_values.get("lower"), dim),
            scheme=grid_values["scheme"],
            stencil_order=grid_values["stencil_order"],
        )
    except GridError as exc:
        raise ConfigError(f"Invalid grid: {exc}", line=raw.line_of("grid"), key="grid") from exc


def _check_momentum_quantization(raw, grid, momentum, alpha):
    """A plane-wave phase is periodic only for p L / (2 pi alpha) integer."""
    if not grid.periodic:
        return
    for axis, (p, length) in enumerate(zip(momentum, grid.extents)):
        turns = p * length / (2.0 * math.pi * alpha)
        if abs(turns - round(turns)) > MOMENTUM_QUANTIZATION_TOLERANCE:
            raise ConfigError(
                f"initial_state.momentum[{axis}] = {p:g} does not fit the periodic box: "
                f"p L / (2 pi alpha) = {turns:.6g} must be an integer",
                line=raw.line_of("initial_state", "momentum"),
                key="initial_state.momentum",
            )


def _build_initial_state(raw, values, grid, alpha):
    state = values["initial_state"]
    family = state["family"]
    center = _vector(raw, "initial_state", "center", state.get("center"), grid.dim)
    momentum = _vector(raw, "initial_state", "momentum", state.get("momentum") or (0.0,), grid.dim)
    sigma = require_positive(state["sigma"], "initial_state.sigma", raw.line_of("initial_state", "sigma"))

    path = state.get("path", "")
    if family == "csv":
        if not path:
            raise ConfigError(
                "initial_state.family = csv needs initial_state.path",
                line=raw.line_of("initial_state"),
                key="initial_state.path",
            )
        if raw.source != "<string>" and not Path(path).is_absolute():
            path = str(Path(raw.source).parent / path)
    if family in ("gaussian", "uniform"):
        _check_momentum_quantization(raw, grid, momentum, alpha)
    return InitialStateSpec(family=family, center=center, sigma=sigma, momentum=momentum, path=path)


def _build_evolution(raw, values, mass, alpha):
    evolution = values["evolution"]
    dt = require_positive(evolution["dt"], "evolution.dt", raw.line_of("evolution", "dt"))
    steps = require_at_least(evolution["steps"], 0, "evolution.steps", raw.line_of("evolution", "steps"))
    horizon = evolution["horizon"]
    if horizon < 0:
        raise ConfigError(
            f"evolution.horizon must be non-negative, got {horizon}",
            line=raw.line_of("evolution", "horizon"),
            key="evolution.horizon",
        )
    if horizon > 0:
        steps = int(math.ceil(horizon / dt - 1e-9))
        dt = horizon / steps
    require_positive(evolution["cfl"], "evolution.cfl", raw.line_of("evolution", "cfl"))
    try:
        config = EvolutionConfig(
            hamiltonian=evolution["hamiltonian"],
            mass=mass,
            alpha=alpha,
            dt=dt,
            steps=steps,
            integrator=evolution["integrator"],
            cfl=evolution["cfl"],
            save_every=evolution["save_every"],
        )
    except EvolutionError as exc:
        raise ConfigError(f"Invalid evolution settings: {exc}", line=raw.line_of("evolution"), key="evolution") from exc
    return config, horizon if horizon > 0 else dt * steps


def _format_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def _parameter_rows(values):
    """(section, key, value) rows in schema order; output_dir is left out so outputs do not depend on where they go."""
    rows = []
    for section, keys in CONFIG_SCHEMA.items():
        for key in keys:
            if section == "scenario" and key == "output_dir":
                continue
            rows.append((section, key, _format_value(values[section].get(key))))
    return tuple(rows)


def build_config(raw):
    """Merge a RawConfig over its scenario defaults and validate everything."""
    _check_required(raw)
    name = validate_scenario_name(raw.values["scenario"]["name"], line=raw.line_of("scenario", "name"))

    values = scenario_defaults(name)
    for section, entries in raw.values.items():
        values[section].update(entries)
    values["scenario"]["name"] = name

    mass = require_positive(values["physics"]["mass"], "physics.mass", raw.line_of("physics", "mass"))
    alpha = require_positive(values["physics"]["alpha"], "physics.alpha", raw.line_of("physics", "alpha"))
    seed = require_at_least(values["scenario"]["seed"], 0, "scenario.seed", raw.line_of("scenario", "seed"))
    samples = require_at_least(values["scenario"]["samples"], 1, "scenario.samples", raw.line_of("scenario", "samples"))

    grid = _build_grid(raw, values)
    initial_state = _build_initial_state(raw, values, grid, alpha)
    evolution, horizon = _build_evolution(raw, values, mass, alpha)

    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        output_dir = Path(override) / name
    else:
        output_dir = Path(values["scenario"].get("output_dir") or Path(DEFAULT_OUTPUT_ROOT) / name)

    config = ScenarioConfig(
        name=name,
        seed=seed,
        samples=samples,
        output_dir=output_dir,
        grid=grid,
        mass=mass,
        alpha=alpha,
        time=values["physics"]["time"],
        initial_state=initial_state,
        evolution=evolution,
        horizon=horizon,
        refinement=bool(values["evolution"]["refinement"]),
        source=raw.source,
        parameters=_parameter_rows(values),
    )
    logger.debug(f"Config {raw.source}: {config.description}")
    return config
