"""
Kahler triples (Omega, g, J) over the (P, S) phase space.

Every kernel involved is local, proportional to delta(x - x'), so a triple
is stored as one 2x2 block per grid point: arrays of shape grid.shape + (2, 2)
with row/column order (P, S), or (psi, psi*) in complex coordinates.

The three compatibility conditions checked by verify_kahler:

  compatibility       Omega = g J
  hermitian           J^T g J = g
  complex_structure   J J = -I
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, NodeError, StructureError
from .fields import madelung_forward, node_mask

logger = logging.getLogger("probability_geometry.kahler")

SYMPLECTIC_BLOCK = np.array([[0.0, 1.0], [-1.0, 0.0]])
FLAT_TOLERANCE = 1e-12


def _blocks(a00, a01, a10, a11):
    """Stack four equally shaped arrays into pointwise 2x2 blocks."""
    return np.stack([np.stack([a00, a01], axis=-1), np.stack([a10, a11], axis=-1)], axis=-2)


def _transpose(blocks):
    return np.swapaxes(blocks, -1, -2)


def _identity_like(blocks):
    return np.broadcast_to(np.eye(blocks.shape[-1], dtype=blocks.dtype), blocks.shape)


def _require_live(P):
    nodes = node_mask(P.values)
    if nodes.any():
        raise NodeError(f"Kahler blocks need P above the node threshold; {int(nodes.sum())} nodes found", int(nodes.sum()))


# === RESIDUAL REPORTS ===

@dataclass(frozen=True)
class ConditionResidual:
    name: str
    max_residual: float
    location: tuple


@dataclass(frozen=True)
class KahlerReport:
    conditions: tuple

    @property
    def max_residual(self):
        return max(c.max_residual for c in self.conditions)

    def get(self, name):
        for condition in self.conditions:
            if condition.name == name:
                return condition
        raise KeyError(name)

    def passed(self, tolerance):
        return self.max_residual <= tolerance


def _condition(name, residual_blocks):
    pointwise = np.max(np.abs(residual_blocks), axis=(-1, -2))
    if pointwise.ndim == 0:
        return ConditionResidual(name, float(pointwise), ())
    flat_index = int(np.argmax(pointwise))
    location = tuple(int(i) for i in np.unravel_index(flat_index, pointwise.shape))
    return ConditionResidual(name, float(pointwise[location]), location)


def verify_kahler(omega, g, J):
    """Pointwise residuals of the three Kahler conditions, maximized over the grid.

    Accepts real (P, S) blocks, complex (psi, psi*) blocks, or single n x n
    matrices. Residuals are returned as data and never raise.
    """
    omega, g, J = np.asarray(omega), np.asarray(g), np.asarray(J)
    report = KahlerReport((
        _condition("compatibility", omega - g @ J),
        _condition("hermitian", _transpose(J) @ g @ J - g),
        _condition("complex_structure", J @ J + _identity_like(J)),
    ))
    logger.debug("Kahler residuals: " + ", ".join(f"{c.name}={c.max_residual:.3e}" for c in report.conditions))
    return report


# === (P, S) TRIPLES ===

@dataclass(frozen=True, eq=False)
class KahlerTriple:
    grid: object
    alpha: float
    A: object
    omega: np.ndarray
    g: np.ndarray
    J: np.ndarray

    def verify(self):
        return verify_kahler(self.omega, self.g, self.J)


def build_general_triple(P, A, alpha):
    """g = [[a/2P, A], [A, (2P/a)(1+A^2)]], J = [[A, (2P/a)(1+A^2)], [-a/2P, -A]] with a = alpha."""
    P.grid.check_same(A.grid)
    _require_live(P)
    p, a = P.values, A.values
    gPP = alpha / (2.0 * p)
    gSS = (2.0 * p / alpha) * (1.0 + a ** 2)
    g = _blocks(gPP, a, a, gSS)
    J = _blocks(a, gSS, -gPP, -a)
    omega = np.broadcast_to(SYMPLECTIC_BLOCK, g.shape).copy()
    return KahlerTriple(P.grid, float(alpha), A, omega, g, J)


def intermediate_J(A, C):
    """J = [[A, C(1+A^2)], [-1/C, -A]] for two arbitrary local functionals."""
    A.grid.check_same(C.grid)
    if np.any(C.values == 0.0):
        raise StructureError(f"C vanishes at {int(np.count_nonzero(C.values == 0.0))} points; J is undefined there")
    a, c = A.values, C.values
    return _blocks(a, c * (1.0 + a ** 2), -1.0 / c, -a)


# === COMPLEX (MADELUNG) COORDINATES ===

@dataclass(frozen=True, eq=False)
class FlatBlocks:
    """Pointwise complex blocks in (psi, psi*) coordinates."""

    omega_c: np.ndarray
    g_c: np.ndarray
    J_c: np.ndarray

    def deviation(self, alpha):
        """Largest entry-wise distance from the constant flat blocks."""
        omega, g, J = flat_blocks(alpha)
        return max(
            float(np.max(np.abs(self.omega_c - omega))),
            float(np.max(np.abs(self.g_c - g))),
            float(np.max(np.abs(self.J_c - J))),
        )


def flat_blocks(alpha):
    """Omega_c = [[0, i a], [-i a, 0]], g_c = [[0, a], [a, 0]], J_c = diag(-i, i)."""
    omega = np.array([[0.0, 1j * alpha], [-1j * alpha, 0.0]])
    g = np.array([[0.0, alpha], [alpha, 0.0]], dtype=complex)
    J = np.array([[-1j, 0.0], [0.0, 1j]])
    return omega, g, J


def madelung_jacobian(state):
    """T = d(psi, psi*)/d(P, S) and its inverse, pointwise."""
    _require_live(state.P)
    psi = madelung_forward(state).values
    P, alpha = state.P.values, state.alpha
    conj = np.conj(psi)
    T = _blocks(psi / (2.0 * P), 1j * psi / alpha, conj / (2.0 * P), -1j * conj / alpha)
    T_inv = _blocks(conj, psi, alpha / (2j * psi), -alpha / (2j * conj))
    return T, T_inv


def complex_coordinate_blocks(triple, state):
    """Pointwise (psi, psi*) blocks of a triple, without checking their form.

    Omega and g transform as covariant tensors, J as a (1,1) tensor.
    """
    triple.grid.check_same(state.grid)
    T, T_inv = madelung_jacobian(state)
    T_inv_t = _transpose(T_inv)
    return FlatBlocks(
        omega_c=T_inv_t @ triple.omega @ T_inv,
        g_c=T_inv_t @ triple.g @ T_inv,
        J_c=T @ triple.J @ T_inv,
    )


def to_complex_coordinates(triple, state):
    """Transform a flat (A = 0) triple to (psi, psi*) coordinates.

    The result must equal the constant flat blocks; a larger deviation
    raises ConsistencyError.
    """
    triple.grid.check_same(state.grid)
    if np.max(np.abs(triple.A.values)) > 0.0:
        raise StructureError("Complex-coordinate flattening requires A = 0 everywhere")
    flat = complex_coordinate_blocks(triple, state)
    deviation = flat.deviation(state.alpha)
    if deviation > FLAT_TOLERANCE * max(1.0, state.alpha):
        raise ConsistencyError(f"Complex-coordinate blocks deviate from the flat form by {deviation:.3e}")
    return flat


def from_complex_coordinates(flat, state):
    """Inverse transform: (psi, psi*) blocks back to (P, S) blocks (omega, g, J)."""
    T, T_inv = madelung_jacobian(state)
    T_t = _transpose(T)
    return T_t @ flat.omega_c @ T, T_t @ flat.g_c @ T, T_inv @ flat.J_c @ T


def constant_flat_blocks(grid, alpha):
    omega, g, J = flat_blocks(alpha)
    shape = grid.shape + (2, 2)
    return FlatBlocks(np.broadcast_to(omega, shape), np.broadcast_to(g, shape), np.broadcast_to(J, shape))


# === FINITE-DIMENSIONAL CONSTRUCTION ===

@dataclass(frozen=True, eq=False)
class AppendixResult:
    j: np.ndarray
    report: KahlerReport

    @property
    def compatible(self):
        return self.report.passed(FLAT_TOLERANCE)


def canonical_symplectic(n):
    """Block-diagonal omega with n/2 copies of [[0, 1], [-1, 0]]."""
    if n % 2:
        raise StructureError(f"A symplectic form needs even dimension, got {n}")
    return np.kron(np.eye(n // 2), SYMPLECTIC_BLOCK)


def appendix_construct(omega, g):
    """j = g^-1 omega from a symplectic form and a metric; report whether j is Kahler.

    Raises StructureError for odd dimension, a non-antisymmetric or degenerate
    omega, or a g that is not symmetric positive-definite. Compatibility
    itself is reported, not enforced.
    """
    omega = np.asarray(omega, dtype=float)
    g = np.asarray(g, dtype=float)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1] or g.shape != omega.shape:
        raise StructureError(f"omega {omega.shape} and g {g.shape} must be equal square matrices")
    n = omega.shape[0]
    if n % 2:
        raise StructureError(f"Odd dimension {n}: no symplectic form exists")
    scale = max(1.0, float(np.max(np.abs(omega))))
    if np.max(np.abs(omega + omega.T)) > 1e-12 * scale:
        raise StructureError("omega is not antisymmetric")
    singular = np.linalg.svd(omega, compute_uv=False)
    if singular[-1] <= 1e-12 * singular[0]:
        raise StructureError("omega is degenerate")
    if np.max(np.abs(g - g.T)) > 1e-12 * max(1.0, float(np.max(np.abs(g)))):
        raise StructureError("g is not symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise StructureError("g is not positive-definite") from exc

    j = np.linalg.solve(g, omega)
    return AppendixResult(j, verify_kahler(omega, g, j))


def compatible_pair(n, rng):
    """Seeded (omega, g) with a Kahler j: both pulled back from the canonical pair by M."""
    M = np.eye(n) + 0.2 * rng.normal(size=(n, n)) / np.sqrt(n)
    omega0 = canonical_symplectic(n)
    omega = M.T @ omega0 @ M
    g = M.T @ M
    return 0.5 * (omega - omega.T), 0.5 * (g + g.T)


def random_spd(n, rng):
    B = rng.normal(size=(n, n))
    return B.T @ B + n * np.eye(n)
