"""
Symplectic structure over the conjugate pair (P, S).

Observables are functionals F[P, S] carrying their value and the two
variational derivatives dF/dP, dF/dS. The Poisson bracket is

    {F, G} = int (dF/dP dG/dS - dF/dS dG/dP)

The built-in Galilean generators come with closed-form derivatives
(integration by parts done by hand); anything without them falls back to
numeric_variational_derivative, which differentiates the discrete
functional point by point.

Generators are always 3-vectors. On 1D and 2D grids the missing
coordinates and derivatives are identically zero.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import FieldError
from .fields import EnsembleState, ScalarField, node_mask
from .grid import gradient_array, integrate_array

logger = logging.getLogger("probability_geometry.canonical")


SPACE_AXES = 3
AXIS_LABELS = ("x", "y", "z")

# Nonzero Levi-Civita entries: ROTATION_TERMS[i] lists (j, k, eps_ijk).
ROTATION_TERMS = {
    0: ((1, 2, 1.0), (2, 1, -1.0)),
    1: ((2, 0, 1.0), (0, 2, -1.0)),
    2: ((0, 1, 1.0), (1, 0, -1.0)),
}

DERIVATIVE_STEP = 1e-6
GAUGE_TOLERANCE = 1e-10
HOMOGENEITY_TOLERANCE = 1e-10
LOCAL_DENSITY_TOLERANCE = 1e-9
NODE_ADMISSIBILITY_TOLERANCE = 1e-6
RENORMALIZE_LIMIT = 1e-6
POSITIVITY_TOLERANCE = 1e-12


def levi_civita(i, j, k):
    for jj, kk, sign in ROTATION_TERMS[i]:
        if (jj, kk) == (j, k):
            return sign
    return 0.0


def axis_derivative(grid, values, axis):
    """d/dx_axis, identically zero for axes beyond the grid dimension."""
    if axis >= grid.dim:
        return np.zeros(grid.shape)
    return gradient_array(grid, values, axis)


def axis_coordinate(grid, axis):
    """x_axis on the grid, identically zero for axes beyond the grid dimension."""
    if axis >= grid.dim:
        return np.zeros(grid.shape)
    return grid.coordinate(axis)


# === OBSERVABLES ===

@dataclass(frozen=True)
class Observable:
    """A functional F[P, S].

    evaluate returns the value; derivative_P / derivative_S return sample
    arrays of dF/dP and dF/dS. Missing derivatives are computed numerically.
    """

    name: str
    evaluate: Callable
    derivative_P: Optional[Callable] = None
    derivative_S: Optional[Callable] = None
    homogeneous: bool = True

    @property
    def analytic(self):
        return self.derivative_P is not None and self.derivative_S is not None

    def value(self, state):
        return float(self.evaluate(state))

    def dFdP(self, state):
        if self.derivative_P is None:
            return numeric_variational_derivative(self, state, "P")
        return ScalarField(state.grid, self.derivative_P(state))

    def dFdS(self, state):
        if self.derivative_S is None:
            return numeric_variational_derivative(self, state, "S")
        return ScalarField(state.grid, self.derivative_S(state))


def numeric_variational_derivative(F, state, which, points=None):
    """Central-difference dF/dP or dF/dS of the discrete functional.

    Component i is [F(field_i + h) - F(field_i - h)] / (2 h dV) with
    h = 1e-6 * max|field| (1e-6 for a zero field). points restricts the
    differencing to a subset of grid indices; the rest of the result is zero.
    """
    if which not in ("P", "S"):
        raise FieldError(f"which must be 'P' or 'S', got {which!r}")
    evaluate = F.value if isinstance(F, Observable) else F
    grid = state.grid
    base = np.array(getattr(state, which).values)
    peak = float(np.max(np.abs(base)))
    h = DERIVATIVE_STEP * (peak if peak > 0.0 else 1.0)

    out = np.zeros(grid.shape)
    indices = np.ndindex(*grid.shape) if points is None else points
    for index in indices:
        index = tuple(index)
        values = []
        for sign in (1.0, -1.0):
            stepped = base.copy()
            stepped[index] += sign * h
            trial = state.with_fields(**{which: ScalarField(grid, stepped)}, unchecked=True)
            value = float(evaluate(trial))
            if not np.isfinite(value):
                raise FieldError(f"Non-finite functional value while differencing {which} at {index}")
            values.append(value)
        out[index] = (values[0] - values[1]) / (2.0 * h * grid.cell_volume)
    return ScalarField(grid, out)


def _integral(state, integrand):
    return float(integrate_array(state.grid, integrand))


def momentum_observable(axis):
    """A_i = int P d_iS: dA/dP = d_iS, dA/dS = -d_iP."""
    return Observable(
        name=f"A_{AXIS_LABELS[axis]}",
        evaluate=lambda s: _integral(s, s.P.values * axis_derivative(s.grid, s.S.values, axis)),
        derivative_P=lambda s: axis_derivative(s.grid, s.S.values, axis),
        derivative_S=lambda s: -axis_derivative(s.grid, s.P.values, axis),
    )


def position_observable(axis):
    """Q_i = int P x_i."""
    return Observable(
        name=f"Q_{AXIS_LABELS[axis]}",
        evaluate=lambda s: _integral(s, s.P.values * axis_coordinate(s.grid, axis)),
        derivative_P=lambda s: axis_coordinate(s.grid, axis),
        derivative_S=lambda s: np.zeros(s.grid.shape),
    )


def angular_momentum_observable(axis):
    """L_i = int P eps_ijk x_j d_kS."""

    def density(s, field):
        total = np.zeros(s.grid.shape)
        for j, k, sign in ROTATION_TERMS[axis]:
            total = total + sign * axis_coordinate(s.grid, j) * axis_derivative(s.grid, field, k)
        return total

    return Observable(
        name=f"L_{AXIS_LABELS[axis]}",
        evaluate=lambda s: _integral(s, s.P.values * density(s, s.S.values)),
        derivative_P=lambda s: density(s, s.S.values),
        derivative_S=lambda s: -density(s, s.P.values),
    )


def boost_observable(axis, mass, time):
    """G_i = m Q_i - t A_i."""
    Q = position_observable(axis)
    A = momentum_observable(axis)
    return Observable(
        name=f"G_{AXIS_LABELS[axis]}",
        evaluate=lambda s: mass * Q.value(s) - time * A.value(s),
        derivative_P=lambda s: mass * axis_coordinate(s.grid, axis) - time * axis_derivative(s.grid, s.S.values, axis),
        derivative_S=lambda s: time * axis_derivative(s.grid, s.P.values, axis),
    )


def normalization_observable():
    """N = int P."""
    return Observable(
        name="N",
        evaluate=lambda s: _integral(s, s.P.values),
        derivative_P=lambda s: np.ones(s.grid.shape),
        derivative_S=lambda s: np.zeros(s.grid.shape),
    )


def squared_norm_observable():
    """(int P)^2, a gauge-invariant functional that is not homogeneous in P."""
    return Observable(
        name="N^2",
        evaluate=lambda s: _integral(s, s.P.values) ** 2,
        derivative_P=lambda s: np.full(s.grid.shape, 2.0 * _integral(s, s.P.values)),
        derivative_S=lambda s: np.zeros(s.grid.shape),
        homogeneous=False,
    )


def phase_density_observable():
    """int P S. Not gauge invariant; used to exercise the numeric derivative."""
    return Observable(
        name="PS",
        evaluate=lambda s: _integral(s, s.P.values * s.S.values),
        derivative_P=lambda s: np.array(s.S.values),
        derivative_S=lambda s: np.array(s.P.values),
    )


# === GALILEAN GENERATORS ===

@dataclass(frozen=True)
class GeneratorSet:
    A: tuple
    L: tuple
    G: tuple
    Q: tuple
    H: Observable
    N: Observable
    mass: float
    time: float

    def observables(self):
        return (*self.A, *self.L, *self.G, *self.Q, self.H, self.N)


def build_galilean_generators(mass, time=0.0, alpha=None, hamiltonian="quantum_free"):
    """The ten Galilean generators plus Q_i and N.

    alpha fixes the constant in the quantum H; None uses each state's alpha.
    """
    from .dynamics import hamiltonian_observable

    if not mass > 0:
        raise FieldError(f"mass must be positive, got {mass}")
    return GeneratorSet(
        A=tuple(momentum_observable(i) for i in range(SPACE_AXES)),
        L=tuple(angular_momentum_observable(i) for i in range(SPACE_AXES)),
        G=tuple(boost_observable(i, mass, time) for i in range(SPACE_AXES)),
        Q=tuple(position_observable(i) for i in range(SPACE_AXES)),
        H=hamiltonian_observable(mass, hamiltonian, alpha),
        N=normalization_observable(),
        mass=float(mass),
        time=float(time),
    )


# === BRACKETS ===

def _bracket_arrays(state, dFdP, dFdS, dGdP, dGdS):
    return float(integrate_array(state.grid, dFdP * dGdS - dFdS * dGdP))


def poisson_bracket(F, G, state):
    """{F, G} = int (dF/dP dG/dS - dF/dS dG/dP)."""
    return _bracket_arrays(
        state, F.dFdP(state).values, F.dFdS(state).values, G.dFdP(state).values, G.dFdS(state).values
    )


@dataclass(frozen=True)
class Relation:
    name: str
    lhs: float
    rhs: float
    residual: float
    relative: float


@dataclass(frozen=True)
class ResidualReport:
    relations: tuple

    @property
    def max_residual(self):
        return max((r.residual for r in self.relations), default=0.0)

    @property
    def max_relative(self):
        return max((r.relative for r in self.relations), default=0.0)

    def worst(self):
        return max(self.relations, key=lambda r: r.relative)

    def get(self, name):
        for relation in self.relations:
            if relation.name == name:
                return relation
        raise KeyError(name)

    def passed(self, tolerance):
        return self.max_relative <= tolerance


def _relation(name, lhs, rhs, scale):
    residual = abs(lhs - rhs)
    return Relation(name, lhs, rhs, residual, residual / max(1.0, abs(rhs), scale))


def spanned_axes(dim):
    """Translation and boost axes that act inside a dim-dimensional grid."""
    return tuple(range(min(dim, SPACE_AXES)))


def spanned_rotations(dim):
    """Rotation axes whose plane lies inside the grid: none in 1D, z alone in 2D."""
    return tuple(i for i in range(SPACE_AXES) if all(j < dim for j, _, _ in ROTATION_TERMS[i]))


def galilean_algebra_residual(gen, state):
    """Evaluate the nine bracket-relation families of the Galilean algebra.

    Only generators acting inside the grid take part: on 1D and 2D grids the
    padded axes carry zero functionals, and relations that leave the grid's
    span cannot close there.
    """
    cache = {}

    def evaluated(obs):
        if obs.name not in cache:
            cache[obs.name] = (obs.value(state), obs.dFdP(state).values, obs.dFdS(state).values)
        return cache[obs.name]

    def bracket(F, G):
        _, fP, fS = evaluated(F)
        _, gP, gS = evaluated(G)
        return _bracket_arrays(state, fP, fS, gP, gS)

    def value(obs):
        return evaluated(obs)[0]

    def scale(*observables):
        return max([gen.mass] + [abs(value(o)) for o in observables])

    def rotate(family, i, j):
        return sum(levi_civita(i, j, k) * value(family[k]) for k in range(SPACE_AXES))

    axes = spanned_axes(state.grid.dim)
    rotations = spanned_rotations(state.grid.dim)
    relations = []
    H = gen.H
    for i in axes:
        relations.append(_relation(f"{{H,{gen.A[i].name}}}", bracket(H, gen.A[i]), 0.0, scale(H, gen.A[i])))
    for i in rotations:
        relations.append(_relation(f"{{H,{gen.L[i].name}}}", bracket(H, gen.L[i]), 0.0, scale(H, gen.L[i])))
    for i in axes:
        relations.append(
            _relation(f"{{H,{gen.G[i].name}}}", bracket(H, gen.G[i]), -value(gen.A[i]), scale(H, gen.G[i]))
        )

    for i in rotations:
        Li = gen.L[i]
        for j in axes:
            Aj, Gj = gen.A[j], gen.G[j]
            relations.append(_relation(f"{{{Li.name},{Aj.name}}}", bracket(Li, Aj), rotate(gen.A, i, j), scale(Li, Aj)))
            relations.append(_relation(f"{{{Li.name},{Gj.name}}}", bracket(Li, Gj), rotate(gen.G, i, j), scale(Li, Gj)))
        for j in rotations:
            Lj = gen.L[j]
            relations.append(_relation(f"{{{Li.name},{Lj.name}}}", bracket(Li, Lj), rotate(gen.L, i, j), scale(Li, Lj)))

    for i in axes:
        for j in axes:
            Ai, Gi = gen.A[i], gen.G[i]
            Aj, Gj = gen.A[j], gen.G[j]
            relations.append(_relation(f"{{{Ai.name},{Aj.name}}}", bracket(Ai, Aj), 0.0, scale(Ai, Aj)))
            relations.append(
                _relation(f"{{{Ai.name},{Gj.name}}}", bracket(Ai, Gj), -gen.mass if i == j else 0.0, scale(Ai, Gj))
            )
            relations.append(_relation(f"{{{Gi.name},{Gj.name}}}", bracket(Gi, Gj), 0.0, scale(Gi, Gj)))

    report = ResidualReport(tuple(relations))
    worst = report.worst()
    logger.debug(f"Galilean algebra: worst relation {worst.name}, relative residual {worst.relative:.3e}")
    return report


def jacobi_residual(F, G, K, state):
    """|{F,{G,K}} + {G,{K,F}} + {K,{F,G}}| with numeric derivatives of the inner brackets."""

    def inner(a, b):
        return Observable(name=f"{{{a.name},{b.name}}}", evaluate=lambda s: poisson_bracket(a, b, s))

    terms = [
        poisson_bracket(F, inner(G, K), state),
        poisson_bracket(G, inner(K, F), state),
        poisson_bracket(K, inner(F, G), state),
    ]
    residual = abs(sum(terms))
    scale = max([1.0] + [abs(t) for t in terms])
    return Relation(f"Jacobi({F.name},{G.name},{K.name})", sum(terms), 0.0, residual, residual / scale)


# === CANONICAL TRANSFORMATIONS ===

def apply_generator(gen, state, epsilon):
    """One infinitesimal canonical step: dP = eps dG/dS, dS = -eps dG/dP."""
    P = state.P.values + epsilon * gen.dFdS(state).values
    S = state.S.values - epsilon * gen.dFdP(state).values
    lowest = float(np.min(P))
    if lowest < -POSITIVITY_TOLERANCE:
        raise FieldError(f"Generator step drives P negative (minimum {lowest:.3e}); reduce epsilon")

    before = state.norm()
    after = float(integrate_array(state.grid, P))
    if abs(after - before) > RENORMALIZE_LIMIT:
        raise FieldError(f"Generator '{gen.name}' changed the normalization by {after - before:.3e}")
    if after != before:
        P = P * (before / after)
    return EnsembleState(ScalarField(state.grid, P), ScalarField(state.grid, S), state.alpha)


# === ADMISSIBILITY CHECKS ===

@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    relative: float
    tolerance: float

    @property
    def passed(self):
        return self.relative <= self.tolerance


def gauge_invariance_check(F, state, shift=1.0, tolerance=GAUGE_TOLERANCE):
    """F(P, S + c) against F(P, S)."""
    base = F.value(state)
    residual = abs(F.value(state.gauge_shifted(shift)) - base)
    return CheckResult(f"gauge({F.name})", residual, residual / max(1.0, abs(base)), tolerance)


def homogeneity_check(F, state, lam=2.0, tolerance=HOMOGENEITY_TOLERANCE):
    """F(lambda P, S) against lambda F(P, S) on the raw, unnormalized functional.

    For F flagged homogeneous the local density form F = int P dF/dP is
    checked as well; its residual counts in units of LOCAL_DENSITY_TOLERANCE.
    """
    if not lam > 0:
        raise FieldError(f"lambda must be positive, got {lam}")
    expected = lam * F.value(state)
    residual = abs(F.value(state.scaled(lam)) - expected)
    relative = residual / max(abs(expected), 1e-300)
    if F.homogeneous:
        density = local_density_check(F, state)
        if not density.passed:
            logger.debug(f"{F.name}: local density form off by {density.relative:.3e}")
        residual = max(residual, density.residual)
        relative = max(relative, density.relative * tolerance / density.tolerance)
    return CheckResult(f"homogeneity({F.name})", residual, relative, tolerance)


def local_density_check(F, state, tolerance=LOCAL_DENSITY_TOLERANCE):
    """F = int P dF/dP for functionals homogeneous of degree one."""
    value = F.value(state)
    density_form = float(integrate_array(state.grid, state.P.values * F.dFdP(state).values))
    residual = abs(value - density_form)
    return CheckResult(f"local_density({F.name})", residual, residual / max(1.0, abs(value)), tolerance)


def _gradient_scale(state):
    """max |grad P| * max(1, max |x|), the size of a single term in dF/dS before cancellation."""
    grid, P = state.grid, state.P.values
    slope = max(float(np.max(np.abs(axis_derivative(grid, P, axis)))) for axis in range(grid.dim))
    reach = max(float(np.max(np.abs(axis_coordinate(grid, axis)))) for axis in range(grid.dim))
    return slope * max(1.0, reach)


def node_admissibility_check(F, state, tolerance=NODE_ADMISSIBILITY_TOLERANCE):
    """dF/dS must vanish where P does.

    max |dF/dS| on nodes is measured against max |dF/dS| or the gradient
    scale of P, whichever is larger. Rotations of a symmetric density have
    dF/dS ~ 0 everywhere, so their own peak is no scale at all.
    """
    dFdS = np.abs(F.dFdS(state).values)
    nodes = node_mask(state.P.values)
    on_nodes = float(np.max(dFdS[nodes])) if nodes.any() else 0.0
    peak = float(np.max(dFdS)) if dFdS.size else 0.0
    scale = max(peak, _gradient_scale(state), 1e-300)
    return CheckResult(f"node_admissibility({F.name})", on_nodes, on_nodes / scale, tolerance)
