"""
CSV codecs for fields, states and parameter metrics.

One row per grid point in C order; columns are the coordinates (x, y, z)
followed by the value columns. Numbers are written with %.17g so a
save/load cycle is lossless and repeated runs are byte-identical.
"""

import logging

import numpy as np

from .errors import FieldError
from .fields import ComplexField, EnsembleState, ScalarField

logger = logging.getLogger("probability_geometry.field_io")

AXIS_NAMES = ("x", "y", "z")
NUMBER_FORMAT = "%.17g"


def _coordinate_columns(grid):
    return [coords.ravel() for coords in grid.mesh()]


def write_table(path, header, columns):
    """Write equal-length columns as a headed CSV file."""
    table = np.column_stack([np.asarray(c, dtype=float).ravel() for c in columns])
    np.savetxt(path, table, delimiter=",", header=",".join(header), comments="", fmt=NUMBER_FORMAT)
    logger.debug(f"Wrote {table.shape[0]} rows to {path}")


def read_table(path, expected_header):
    """Read a CSV written by write_table, checking its header."""
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
    if header != list(expected_header):
        raise FieldError(f"{path}: expected columns {','.join(expected_header)}, found {','.join(header)}")
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _grid_table(path, grid, value_names):
    header = list(AXIS_NAMES[: grid.dim]) + list(value_names)
    table = read_table(path, header)
    if table.shape[0] != grid.size:
        raise FieldError(f"{path}: {table.shape[0]} rows, grid has {grid.size} points")
    for axis, expected in enumerate(_coordinate_columns(grid)):
        tolerance = 1e-9 * max(grid.extents[axis], 1.0)
        if np.max(np.abs(table[:, axis] - expected)) > tolerance:
            raise FieldError(f"{path}: column '{AXIS_NAMES[axis]}' does not match the grid coordinates")
    return table[:, grid.dim:]


# === FIELDS ===

def write_scalar_field(path, field, name="value"):
    write_table(path, list(AXIS_NAMES[: field.grid.dim]) + [name], _coordinate_columns(field.grid) + [field.values])


def read_scalar_field(path, grid, name="value"):
    values = _grid_table(path, grid, [name])
    return ScalarField(grid, values[:, 0].reshape(grid.shape))


def write_complex_field(path, field):
    columns = _coordinate_columns(field.grid) + [field.values.real, field.values.imag]
    write_table(path, list(AXIS_NAMES[: field.grid.dim]) + ["real", "imag"], columns)


def read_complex_field(path, grid):
    values = _grid_table(path, grid, ["real", "imag"])
    return ComplexField(grid, (values[:, 0] + 1j * values[:, 1]).reshape(grid.shape))


def write_state(path, state):
    columns = _coordinate_columns(state.grid) + [state.P.values, state.S.values]
    write_table(path, list(AXIS_NAMES[: state.grid.dim]) + ["P", "S"], columns)


def read_state(path, grid, alpha):
    """Load (P, S) columns; P is renormalized under the usual drift rule."""
    values = _grid_table(path, grid, ["P", "S"])
    return EnsembleState.from_arrays(grid, values[:, 0].reshape(grid.shape), values[:, 1].reshape(grid.shape), alpha)


# === PARAMETER METRICS ===

def write_param_metric(path, metric):
    names = list(AXIS_NAMES[: metric.dim])
    write_table(path, names, [metric.entries[:, k] for k in range(metric.dim)])
