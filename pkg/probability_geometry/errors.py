"""
Exception hierarchy for the probability geometry core.

Everything raised on purpose by the numerical modules derives from
GeometryError, so outer surfaces (CLI, MCP tools) can catch one type.
"""


class GeometryError(Exception):
    """Base class for all toolkit errors."""


class GridError(GeometryError):
    """Invalid grid specification, axis out of range, or grid mismatch."""


class FieldError(GeometryError):
    """Non-finite samples, bad shapes, rejected normalization or positivity."""


class NodeError(FieldError):
    """An operation needs P > eps at points where P is below the node threshold."""

    def __init__(self, message, node_count=0):
        super().__init__(message)
        self.node_count = node_count


class StructureError(GeometryError):
    """Degenerate or incompatible symplectic, metric, or complex structure input."""


class ConsistencyError(GeometryError):
    """Two computation routes that must agree do not."""


class EvolutionError(GeometryError):
    """Time-stepping failure: CFL violation, unknown scheme, linear-solve failure."""
