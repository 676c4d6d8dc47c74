"""
Information geometry on probability fields.

  fisher_metric_translation   gamma_jk = (alpha/2) int (1/P) d_jP d_kP
  jeffreys_line_element       ds^2 = (alpha/2) int dP^2 / P
  metric_gPP                  the diagonal kernel alpha / 2P
  induced_param_metric        g_jk over (P, S) for translation parameters

Every 1/P integrand is regularized the same way: node points (P below the
node threshold) contribute nothing, and the probability mass sitting on
them is reported as truncated_mass.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import FieldError, NodeError
from .fields import ScalarField, node_mask
from .grid import gradient_array, integrate_array, translate

logger = logging.getLogger("probability_geometry.infogeo")

TRUNCATION_WARNING = 1e-9
PSD_TOLERANCE = 1e-10
ZERO_MEAN_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class ParamMetric:
    """Symmetric n x n metric over translation parameters."""

    entries: np.ndarray
    truncated_mass: float = 0.0

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise FieldError(f"ParamMetric needs a square matrix, got shape {entries.shape}")
        scale = max(1.0, float(np.max(np.abs(entries))))
        if np.max(np.abs(entries - entries.T)) > 1e-12 * scale:
            raise FieldError("ParamMetric entries are not symmetric")
        entries = 0.5 * (entries + entries.T)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self):
        return self.entries.shape[0]

    def trace(self):
        return float(np.trace(self.entries))

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.entries)

    def is_psd(self, tolerance=PSD_TOLERANCE):
        return bool(np.all(self.eigenvalues() >= -tolerance))

    def quadratic_form(self, delta):
        delta = np.asarray(delta, dtype=float)
        return float(delta @ self.entries @ delta)


@dataclass(frozen=True, eq=False)
class DiagonalKernel:
    """Pointwise weights w(x) of a kernel w(x) delta(x - x')."""

    weights: ScalarField
    nodes: np.ndarray
    truncated_mass: float = 0.0

    def contract(self, a, b):
        """int a(x) w(x) b(x), skipping node points."""
        self.weights.grid.check_same(a.grid)
        self.weights.grid.check_same(b.grid)
        integrand = np.where(self.nodes, 0.0, a.values * self.weights.values * b.values)
        return float(integrate_array(self.weights.grid, integrand))


def regularize_density(P):
    """Node mask, safe reciprocal and truncated mass for a density field."""
    values = P.values
    if float(np.max(values)) <= 0.0:
        raise NodeError("P vanishes everywhere; the metric is undefined", P.grid.size)
    nodes = node_mask(values)
    inverse = np.zeros_like(values)
    inverse[~nodes] = 1.0 / values[~nodes]
    truncated = float(integrate_array(P.grid, np.where(nodes, values, 0.0)))
    if truncated > TRUNCATION_WARNING:
        logger.warning(f"Dropping {int(nodes.sum())} node points carrying mass {truncated:.3e}")
    return nodes, inverse, truncated


def _gradients(field):
    return [gradient_array(field.grid, field.values, axis) for axis in range(field.grid.dim)]


def _gram(grid, weight, vectors_a, vectors_b=None):
    vectors_b = vectors_a if vectors_b is None else vectors_b
    n = len(vectors_a)
    out = np.zeros((n, n))
    for j in range(n):
        for k in range(n):
            out[j, k] = integrate_array(grid, weight * vectors_a[j] * vectors_b[k])
    return out


# === FISHER-RAO ===

def fisher_metric_translation(P, alpha):
    """gamma_jk = (alpha/2) int (1/P) d_jP d_kP, the Fisher matrix of the location family."""
    _, inverse, truncated = regularize_density(P)
    entries = 0.5 * alpha * _gram(P.grid, inverse, _gradients(P))
    return ParamMetric(entries, truncated)


def fisher_metric_shifted(P, shifts, alpha):
    """Fisher matrix of the translated density P(x + shifts * dx)."""
    return fisher_metric_translation(translate(P, shifts), alpha)


def translation_perturbation(P, delta):
    """dP = sum_j d_jP * delta^j, the first-order change of P under x -> x + delta."""
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (P.grid.dim,))
    gradients = _gradients(P)
    return P.with_values(sum(d * g for d, g in zip(delta, gradients)))


def metric_gPP(P, alpha, strict=False):
    """Diagonal kernel alpha / (2 P(x)).

    Node points get weight 0 and are masked out of every contraction;
    strict=True refuses densities with nodes instead.
    """
    nodes, inverse, truncated = regularize_density(P)
    if strict and nodes.any():
        raise NodeError(f"g_PP is singular at {int(nodes.sum())} node points", int(nodes.sum()))
    return DiagonalKernel(P.with_values(0.5 * alpha * inverse), nodes, truncated)


def contract_gPP(kernel, a, b):
    return kernel.contract(a, b)


def jeffreys_line_element(P, deltaP, alpha):
    """ds^2 = (alpha/2) int deltaP^2 / P for a normalization-preserving deltaP."""
    P.grid.check_same(deltaP.grid)
    drift = float(integrate_array(P.grid, deltaP.values))
    scale = max(1.0, float(integrate_array(P.grid, np.abs(deltaP.values))))
    if abs(drift) > ZERO_MEAN_TOLERANCE * scale:
        raise FieldError(f"Perturbation changes the normalization by {drift:.3e}")
    return metric_gPP(P, alpha).contract(deltaP, deltaP)


# === PARAMETER METRIC OVER (P, S) ===

def induced_param_metric(state):
    """g_jk = (2/alpha) int P (d_jS d_kS + alpha^2/(4P^2) d_jP d_kP)."""
    alpha = state.alpha
    nodes, inverse, truncated = regularize_density(state.P)
    dP = _gradients(state.P)
    dS = _gradients(state.S)
    P_live = np.where(nodes, 0.0, state.P.values)
    phase_part = _gram(state.grid, P_live, dS)
    density_part = _gram(state.grid, inverse, dP)
    entries = (2.0 / alpha) * phase_part + (2.0 / alpha) * (alpha ** 2 / 4.0) * density_part
    return ParamMetric(entries, truncated)
