"""
Canonical field variables and the Madelung coordinate change.

  ScalarField    real samples on a grid (P, S, the functional A_x, ...)
  ComplexField   complex samples on a grid (psi)
  EnsembleState  the canonical pair (P, S) together with the constant alpha

The Madelung map psi = sqrt(P) exp(iS/alpha) and its inverse connect the two
descriptions. S is only defined up to a global additive constant, and it is
undefined at nodes (P below the node threshold); the inverse map unwraps the
phase breadth-first from a gauge point and refuses to jump across nodes.
"""

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import FieldError, GridError, NodeError
from .grid import GridSpec, integrate_array

logger = logging.getLogger("probability_geometry.fields")


# Points with P < NODE_THRESHOLD * max(P) are nodes.
NODE_THRESHOLD = 1e-12

# |integral(P) - 1| above this is rejected; below it P is renormalized.
RENORMALIZE_LIMIT = 1e-6
NORMALIZATION_TOLERANCE = 1e-9

POSITIVITY_TOLERANCE = 1e-12


def node_mask(values):
    """Boolean mask of nodes: samples below NODE_THRESHOLD * max."""
    values = np.asarray(values, dtype=float)
    peak = float(np.max(values)) if values.size else 0.0
    if peak <= 0.0:
        return np.ones(values.shape, dtype=bool)
    return values < NODE_THRESHOLD * peak


def _as_samples(grid, values, dtype):
    if not isinstance(grid, GridSpec):
        raise GridError(f"Expected a GridSpec, got {type(grid).__name__}")
    arr = np.array(values, dtype=dtype)
    if arr.shape != grid.shape:
        if arr.size == grid.size:
            arr = arr.reshape(grid.shape)
        else:
            raise FieldError(f"Samples of shape {arr.shape} do not fit grid shape {grid.shape}")
    if not np.all(np.isfinite(arr)):
        raise FieldError("Field samples must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real samples on a grid. Immutable once constructed."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_samples(self.grid, self.values, float))

    @classmethod
    def constant(cls, grid, value=0.0):
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn(*coordinates) on the grid."""
        return cls(grid, np.broadcast_to(fn(*grid.mesh()), grid.shape))

    def with_values(self, values):
        return ScalarField(self.grid, values)

    def _other(self, other):
        if isinstance(other, ScalarField):
            self.grid.check_same(other.grid)
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __mul__(self, other):
        return self.with_values(self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples on a grid; `normalized` asserts integral |psi|^2 = 1."""

    grid: GridSpec
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", _as_samples(self.grid, self.values, complex))
        if self.normalized:
            norm = float(integrate_array(self.grid, np.abs(self.values) ** 2))
            if abs(norm - 1.0) > NORMALIZATION_TOLERANCE:
                raise FieldError(f"Field flagged normalized but integral |psi|^2 = {norm:.12g}")

    def with_values(self, values):
        return ComplexField(self.grid, values)

    def density(self):
        return ScalarField(self.grid, np.abs(self.values) ** 2)

    def conj(self):
        return ComplexField(self.grid, np.conj(self.values))

    def scaled(self, factor):
        return ComplexField(self.grid, factor * self.values)


@dataclass(frozen=True, eq=False)
class EnsembleState:
    """The canonical pair (P, S) and the constant alpha.

    Direct construction only checks positivity and shapes, so raw functionals
    can be evaluated at lambda * P. Use EnsembleState.create for the normalized
    states every evolution and scenario works with. unchecked=True also waives
    positivity, for finite-difference steps that dip below P = 0.
    """

    P: ScalarField
    S: ScalarField
    alpha: float
    unchecked: bool = False

    def __post_init__(self):
        self.P.grid.check_same(self.S.grid)
        alpha = float(self.alpha)
        if not np.isfinite(alpha) or alpha <= 0:
            raise FieldError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "alpha", alpha)
        if self.unchecked:
            return
        lowest = float(np.min(self.P.values))
        if lowest < -POSITIVITY_TOLERANCE:
            raise FieldError(f"P must be non-negative, minimum sample is {lowest:.3e}")

    @classmethod
    def create(cls, P, S, alpha):
        """Build a normalized state, renormalizing small drift and rejecting the rest."""
        total = float(integrate_array(P.grid, P.values))
        drift = abs(total - 1.0)
        if drift > RENORMALIZE_LIMIT:
            raise FieldError(
                f"integral(P) = {total:.12g} is too far from 1 "
                f"(limit {RENORMALIZE_LIMIT:g}); refusing to renormalize"
            )
        if drift > 0.0:
            logger.debug(f"Renormalizing P (drift {drift:.3e})")
            P = P.with_values(P.values / total)
        return cls(P, S, alpha)

    @classmethod
    def from_arrays(cls, grid, P, S, alpha):
        return cls.create(ScalarField(grid, P), ScalarField(grid, S), alpha)

    @property
    def grid(self):
        return self.P.grid

    def norm(self):
        return float(integrate_array(self.grid, self.P.values))

    def nodes(self):
        return node_mask(self.P.values)

    def with_fields(self, P=None, S=None, unchecked=False):
        return EnsembleState(
            P if P is not None else self.P,
            S if S is not None else self.S,
            self.alpha,
            unchecked=unchecked,
        )

    def gauge_shifted(self, c):
        """The same physical state with S -> S + c."""
        return self.with_fields(S=self.S + float(c))

    def scaled(self, factor):
        """Raw state with P -> factor * P (no normalization enforced)."""
        return self.with_fields(P=self.P * float(factor))


# === MADELUNG TRANSFORMATION ===

def madelung_forward(state):
    """psi = sqrt(P) exp(iS/alpha), pointwise."""
    amplitude = np.sqrt(np.clip(state.P.values, 0.0, None))
    psi = amplitude * np.exp(1j * state.S.values / state.alpha)
    return ComplexField(state.grid, psi, normalized=abs(state.norm() - 1.0) <= NORMALIZATION_TOLERANCE)


@dataclass(frozen=True)
class PhaseUnwrap:
    """Result of unwrapping arg(psi) from a gauge point."""

    S: np.ndarray
    nodes: np.ndarray
    gauge_point: tuple
    winding_edges: int


def _neighbors(index, grid):
    """Axis-ordered neighbors (minus side first), wrapping on periodic grids."""
    for axis in range(grid.dim):
        n = grid.points[axis]
        for step in (-1, 1):
            j = index[axis] + step
            if grid.periodic:
                j %= n
            elif not 0 <= j < n:
                continue
            neighbor = list(index)
            neighbor[axis] = j
            yield tuple(neighbor)


def unwrap_phase(psi, alpha, gauge_point=None):
    """Unwrap alpha * arg(psi) breadth-first from gauge_point.

    Nodes (|psi|^2 below threshold) are never crossed; their S is set to 0 and
    flagged in the returned mask. Edges whose unwrapped jump differs from the
    local wrapped phase difference by more than pi are counted as winding
    edges (periodic phase windings or loops around nodes).
    """
    grid = psi.grid
    density = np.abs(psi.values) ** 2
    nodes = node_mask(density)

    if gauge_point is None:
        gauge_point = np.unravel_index(int(np.argmax(density)), grid.shape)
    gauge_point = tuple(int(i) for i in np.atleast_1d(gauge_point))
    if len(gauge_point) != grid.dim or any(not 0 <= i < n for i, n in zip(gauge_point, grid.shape)):
        raise GridError(f"Gauge point {gauge_point} is not a grid index")
    if nodes[gauge_point]:
        raise NodeError(f"Gauge point {gauge_point} sits on a node of psi", int(nodes.sum()))

    values = psi.values
    phase = np.zeros(grid.shape)
    visited = np.zeros(grid.shape, dtype=bool)
    phase[gauge_point] = np.angle(values[gauge_point])
    visited[gauge_point] = True
    queue = deque([gauge_point])

    while queue:
        index = queue.popleft()
        for neighbor in _neighbors(index, grid):
            if visited[neighbor] or nodes[neighbor]:
                continue
            phase[neighbor] = phase[index] + np.angle(values[neighbor] * np.conj(values[index]))
            visited[neighbor] = True
            queue.append(neighbor)

    unreached = ~visited & ~nodes
    if unreached.any():
        raise NodeError(
            f"{int(unreached.sum())} points are cut off from the gauge point by nodes; "
            f"S cannot be continued across |psi|^2 = 0",
            int(nodes.sum()),
        )

    winding = 0
    for axis in range(grid.dim):
        ahead_phase = np.roll(phase, -1, axis=axis)
        ahead_values = np.roll(values, -1, axis=axis)
        both = ~nodes & ~np.roll(nodes, -1, axis=axis)
        if not grid.periodic:
            last = [slice(None)] * grid.dim
            last[axis] = -1
            both[tuple(last)] = False
        local = np.angle(ahead_values * np.conj(values))
        jump = ahead_phase - phase
        winding += int(np.count_nonzero(both & (np.abs(jump - local) > np.pi)))

    S = alpha * phase
    S[nodes] = 0.0
    return PhaseUnwrap(S=S, nodes=nodes, gauge_point=gauge_point, winding_edges=winding)


def madelung_inverse(psi, alpha, gauge_point=None):
    """P = |psi|^2, S = alpha * unwrapped arg(psi), gauge fixed at gauge_point."""
    unwrapped = unwrap_phase(psi, alpha, gauge_point)
    if unwrapped.winding_edges:
        logger.warning(
            f"Phase winding detected across {unwrapped.winding_edges} grid edges; "
            f"S jumps by multiples of 2*pi*alpha there"
        )
    P = ScalarField(psi.grid, np.abs(psi.values) ** 2)
    return EnsembleState.create(P, ScalarField(psi.grid, unwrapped.S), alpha)
