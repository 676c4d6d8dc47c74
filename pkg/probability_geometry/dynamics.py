"""
Ensemble Hamiltonians and time evolution.

Two Hamiltonians for a free particle of mass m:

  quantum_free    H = (1/2m) int (P |grad S|^2 + (alpha^2 / 4P) |grad P|^2)
  classical_free  H = (1/2m) int P |grad S|^2

and two independent evolution paths:

  rk4_PS              Hamilton's equations for (P, S) with classical RK4 and a
                      renormalization guard after every step.
  crank_nicolson_psi  the Schrodinger equation i alpha psi_t = -(alpha^2/2m) lap psi
                      with the implicit midpoint rule (Cayley factor in Fourier
                      space on spectral grids, sparse LU on central grids).

cross_validate runs both from the same initial state and measures how far
apart they end up.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .canonical import Observable, SPACE_AXES, axis_derivative, axis_coordinate
from .errors import EvolutionError, NodeError
from .fields import (
    ComplexField, EnsembleState, ScalarField, madelung_forward, madelung_inverse, node_mask,
)
from .grid import (
    fourier_shift_array, gradient_array, integrate_array, laplacian_array, laplacian_matrix,
    laplacian_spectral_radius, wavenumber_squared,
)
from .infogeo import regularize_density

logger = logging.getLogger("probability_geometry.dynamics")


HAMILTONIANS = ("quantum_free", "classical_free")
INTEGRATORS = ("rk4_PS", "crank_nicolson_psi")

DEFAULT_CFL = 0.1
RENORMALIZE_LIMIT = 1e-6
# cross_validate needs min(P) >= NODE_FREE_RATIO * max(P) at t = 0; thinner tails
# make the direct (P, S) path unstable long before the CFL limit.
NODE_FREE_RATIO = 1e-3


@dataclass(frozen=True)
class EvolutionConfig:
    hamiltonian: str = "quantum_free"
    mass: float = 1.0
    alpha: float = 1.0
    dt: float = 0.01
    steps: int = 100
    integrator: str = "rk4_PS"
    cfl: float = DEFAULT_CFL
    save_every: int = 1

    def __post_init__(self):
        if self.hamiltonian not in HAMILTONIANS:
            raise EvolutionError(f"Unknown hamiltonian '{self.hamiltonian}'. Use one of {HAMILTONIANS}")
        if self.integrator not in INTEGRATORS:
            raise EvolutionError(f"Unknown integrator '{self.integrator}'. Use one of {INTEGRATORS}")
        if not self.mass > 0:
            raise EvolutionError(f"mass must be positive, got {self.mass}")
        if not self.alpha > 0:
            raise EvolutionError(f"alpha must be positive, got {self.alpha}")
        if not self.dt > 0:
            raise EvolutionError(f"dt must be positive, got {self.dt}")
        if self.steps < 0:
            raise EvolutionError(f"steps must be non-negative, got {self.steps}")
        if self.save_every < 1:
            raise EvolutionError(f"save_every must be at least 1, got {self.save_every}")
        if self.integrator == "crank_nicolson_psi" and self.hamiltonian != "quantum_free":
            raise EvolutionError("crank_nicolson_psi evolves the Schrodinger equation; use hamiltonian = quantum_free")

    @property
    def quantum(self):
        return self.hamiltonian == "quantum_free"

    def max_stable_dt(self, grid):
        """CFL-style limit 4 c m / (alpha rho) for the quantum (P, S) equations.

        rho is the spectral radius of the grid Laplacian, so an order-2 stencil
        in 1D gives c m dx^2 / alpha and a spectral grid (4/pi^2) c m dx^2 / alpha.
        """
        return 4.0 * self.cfl * self.mass / (self.alpha * laplacian_spectral_radius(grid))

    def check_cfl(self, grid):
        if self.integrator != "rk4_PS" or not self.quantum:
            return
        limit = self.max_stable_dt(grid)
        if self.dt > limit:
            raise EvolutionError(f"dt = {self.dt:g} exceeds the stability limit {limit:.6g} for this grid")


def _check_alpha(state, config):
    if abs(state.alpha - config.alpha) > 1e-12 * config.alpha:
        raise EvolutionError(f"State alpha {state.alpha} differs from evolution alpha {config.alpha}")


# === HAMILTONIANS ===

def _squared_gradient(grid, values):
    return sum(gradient_array(grid, values, axis) ** 2 for axis in range(grid.dim))


def _flux_divergence(grid, P, S):
    """div(P grad S)."""
    total = np.zeros(grid.shape)
    for axis in range(grid.dim):
        total = total + gradient_array(grid, P * gradient_array(grid, S, axis), axis)
    return total


def _quantum_potential_array(grid, P, alpha, mass, drop_nodes):
    nodes = node_mask(P)
    if nodes.any() and not drop_nodes:
        raise NodeError(
            f"The quantum potential is undefined at {int(nodes.sum())} node points", int(nodes.sum())
        )
    root = np.sqrt(np.clip(P, 0.0, None))
    curvature = laplacian_array(grid, root)
    out = np.zeros(grid.shape)
    live = ~nodes
    out[live] = -(alpha ** 2 / (2.0 * mass)) * curvature[live] / root[live]
    return out


def quantum_potential(state, mass, drop_nodes=False):
    """-(alpha^2/2m) lap(sqrt P) / sqrt P; zero at nodes when drop_nodes is set."""
    return ScalarField(state.grid, _quantum_potential_array(state.grid, state.P.values, state.alpha, mass, drop_nodes))


def free_particle_hamiltonian(state, mass, alpha=None):
    """Quantum free-particle ensemble Hamiltonian; node points are dropped."""
    alpha = state.alpha if alpha is None else alpha
    nodes, inverse, _ = regularize_density(state.P)
    grid = state.grid
    P_live = np.where(nodes, 0.0, state.P.values)
    kinetic = integrate_array(grid, P_live * _squared_gradient(grid, state.S.values))
    fisher = integrate_array(grid, inverse * _squared_gradient(grid, state.P.values))
    return float((kinetic + (alpha ** 2 / 4.0) * fisher) / (2.0 * mass))


def classical_hamiltonian(state, mass):
    """(1/2m) int P |grad S|^2."""
    grid = state.grid
    return float(integrate_array(grid, state.P.values * _squared_gradient(grid, state.S.values)) / (2.0 * mass))


def hamiltonian_observable(mass, kind="quantum_free", alpha=None):
    """H as an Observable with closed-form variational derivatives."""
    if kind not in HAMILTONIANS:
        raise EvolutionError(f"Unknown hamiltonian '{kind}'. Use one of {HAMILTONIANS}")
    quantum = kind == "quantum_free"

    def alpha_of(s):
        return s.alpha if alpha is None else alpha

    def value(s):
        if quantum:
            return free_particle_hamiltonian(s, mass, alpha_of(s))
        return classical_hamiltonian(s, mass)

    def derivative_P(s):
        out = _squared_gradient(s.grid, s.S.values) / (2.0 * mass)
        if quantum:
            out = out + _quantum_potential_array(s.grid, s.P.values, alpha_of(s), mass, drop_nodes=True)
        return out

    def derivative_S(s):
        return -_flux_divergence(s.grid, s.P.values, s.S.values) / mass

    return Observable(name="H", evaluate=value, derivative_P=derivative_P, derivative_S=derivative_S)


# === EQUATIONS OF MOTION ===

def _time_derivatives(grid, P, S, alpha, mass, quantum):
    Pdot = -_flux_divergence(grid, P, S) / mass
    Sdot = -_squared_gradient(grid, S) / (2.0 * mass)
    if quantum:
        Sdot = Sdot - _quantum_potential_array(grid, P, alpha, mass, drop_nodes=False)
    return Pdot, Sdot


def equations_of_motion(state, config):
    """(Pdot, Sdot) = (dH/dS, -dH/dP)."""
    _check_alpha(state, config)
    Pdot, Sdot = _time_derivatives(state.grid, state.P.values, state.S.values, state.alpha, config.mass, config.quantum)
    return ScalarField(state.grid, Pdot), ScalarField(state.grid, Sdot)


# === CONSERVED QUANTITIES ===

@dataclass(frozen=True)
class ConservedQuantities:
    t: float
    norm: float
    H: float
    A: tuple
    sigma: float
    center: tuple

    def row(self):
        return [self.t, self.norm, self.H, *self.A, self.sigma]


def _moments(grid, density):
    total = float(integrate_array(grid, density))
    center = []
    variance = 0.0
    for axis in range(grid.dim):
        x = grid.coordinate(axis)
        mean = float(integrate_array(grid, density * x)) / total
        center.append(mean)
        variance += float(integrate_array(grid, density * (x - mean) ** 2)) / total
    return tuple(center), math.sqrt(variance)


def state_quantities(state, config, t):
    grid = state.grid
    if config.quantum:
        H = free_particle_hamiltonian(state, config.mass)
    else:
        H = classical_hamiltonian(state, config.mass)
    A = tuple(
        float(integrate_array(grid, state.P.values * axis_derivative(grid, state.S.values, axis)))
        for axis in range(SPACE_AXES)
    )
    center, sigma = _moments(grid, state.P.values)
    return ConservedQuantities(t, state.norm(), H, A, sigma, center)


def wavefunction_quantities(psi, config, t):
    """Norm, energy and momentum computed directly from psi."""
    grid = psi.grid
    values = psi.values
    density = np.abs(values) ** 2
    gradients = [axis_derivative(grid, values, axis) for axis in range(SPACE_AXES)]
    kinetic = float(integrate_array(grid, sum(np.abs(g) ** 2 for g in gradients)))
    A = tuple(float(config.alpha * np.imag(integrate_array(grid, np.conj(values) * g))) for g in gradients)
    center, sigma = _moments(grid, density)
    H = config.alpha ** 2 / (2.0 * config.mass) * kinetic
    return ConservedQuantities(t, float(integrate_array(grid, density)), H, A, sigma, center)


# === EVOLUTION ===

@dataclass
class Trajectory:
    config: EvolutionConfig
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    wavefunctions: list = field(default_factory=list)
    conserved: list = field(default_factory=list)

    @property
    def final_state(self):
        return self.states[-1]

    def max_drift(self, quantity):
        """Largest |q(t) - q(0)| over saved times for 'norm', 'H' or 'A'."""
        first = self.conserved[0]
        if quantity == "A":
            return max(max(abs(a - b) for a, b in zip(c.A, first.A)) for c in self.conserved)
        return max(abs(getattr(c, quantity) - getattr(first, quantity)) for c in self.conserved)


def _rk4_step(grid, P, S, dt, alpha, config):
    def rhs(p, s):
        return _time_derivatives(grid, p, s, alpha, config.mass, config.quantum)

    k1P, k1S = rhs(P, S)
    k2P, k2S = rhs(P + 0.5 * dt * k1P, S + 0.5 * dt * k1S)
    k3P, k3S = rhs(P + 0.5 * dt * k2P, S + 0.5 * dt * k2S)
    k4P, k4S = rhs(P + dt * k3P, S + dt * k3S)
    P_next = P + dt / 6.0 * (k1P + 2.0 * k2P + 2.0 * k3P + k4P)
    S_next = S + dt / 6.0 * (k1S + 2.0 * k2S + 2.0 * k3S + k4S)
    return P_next, S_next


def _evolve_PS(state, config):
    config.check_cfl(state.grid)
    grid = state.grid
    trajectory = Trajectory(config)
    P = np.array(state.P.values)
    S = np.array(state.S.values)
    current = state

    trajectory.times.append(0.0)
    trajectory.states.append(current)
    trajectory.conserved.append(state_quantities(current, config, 0.0))

    for step in range(1, config.steps + 1):
        P, S = _rk4_step(grid, P, S, config.dt, state.alpha, config)
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(S))):
            raise EvolutionError(f"Non-finite fields after step {step}; reduce dt")
        total = float(integrate_array(grid, P))
        if abs(total - 1.0) > RENORMALIZE_LIMIT:
            raise EvolutionError(f"Normalization drifted to {total:.12g} at step {step}")
        P = P / total

        if step % config.save_every == 0 or step == config.steps:
            t = step * config.dt
            current = EnsembleState(ScalarField(grid, P), ScalarField(grid, S), state.alpha)
            trajectory.times.append(t)
            trajectory.states.append(current)
            trajectory.conserved.append(state_quantities(current, config, t))
            logger.debug(f"rk4_PS step {step}: t={t:.6g}")
    return trajectory


class SchrodingerPropagator:
    """One implicit-midpoint step of i alpha psi_t = -(alpha^2/2m) lap psi."""

    def __init__(self, grid, dt, alpha, mass):
        self.grid = grid
        coefficient = 1j * dt * alpha / (4.0 * mass)
        if grid.scheme == "spectral":
            k2 = wavenumber_squared(grid)
            self._factor = (1.0 - coefficient * k2) / (1.0 + coefficient * k2)
            self._lu = None
        else:
            lap = laplacian_matrix(grid)
            identity = sparse.identity(grid.size, format="csc", dtype=complex)
            self._explicit = (identity + coefficient * lap).tocsr()
            try:
                self._lu = splu((identity - coefficient * lap).tocsc())
            except RuntimeError as exc:
                raise EvolutionError(f"Crank-Nicolson factorization failed: {exc}") from exc

    def step(self, values):
        if self._lu is None:
            return np.fft.ifftn(self._factor * np.fft.fftn(values))
        rhs = self._explicit @ values.ravel()
        return self._lu.solve(rhs).reshape(self.grid.shape)


def _evolve_psi(state, config):
    grid = state.grid
    psi = madelung_forward(state)
    propagator = SchrodingerPropagator(grid, config.dt, config.alpha, config.mass)
    trajectory = Trajectory(config)

    def record(t, wavefunction):
        trajectory.times.append(t)
        trajectory.wavefunctions.append(wavefunction)
        trajectory.states.append(madelung_inverse(wavefunction, state.alpha))
        trajectory.conserved.append(wavefunction_quantities(wavefunction, config, t))

    trajectory.times.append(0.0)
    trajectory.wavefunctions.append(psi)
    trajectory.states.append(state)
    trajectory.conserved.append(wavefunction_quantities(psi, config, 0.0))

    values = psi.values
    for step in range(1, config.steps + 1):
        values = propagator.step(values)
        if not np.all(np.isfinite(values)):
            raise EvolutionError(f"Non-finite psi after step {step}")
        if step % config.save_every == 0 or step == config.steps:
            record(step * config.dt, ComplexField(grid, values))
    return trajectory


def evolve(state, config):
    """Integrate from state for config.steps steps, saving every config.save_every."""
    _check_alpha(state, config)
    logger.info(
        f"Evolving {config.hamiltonian} with {config.integrator}: "
        f"dt={config.dt:g}, steps={config.steps}, {state.grid.describe()}"
    )
    if config.integrator == "rk4_PS":
        trajectory = _evolve_PS(state, config)
    else:
        trajectory = _evolve_psi(state, config)
    logger.info(
        f"Evolution done: norm drift {trajectory.max_drift('norm'):.3e}, "
        f"energy drift {trajectory.max_drift('H'):.3e}"
    )
    return trajectory


# === CROSS-VALIDATION ===

@dataclass(frozen=True)
class CrossValidationReport:
    applicable: bool
    reason: str = ""
    times: tuple = ()
    P_L1: tuple = ()
    S_L2: tuple = ()
    psi_L2: tuple = ()
    direct_conserved: tuple = ()
    oracle_conserved: tuple = ()

    @property
    def max_P_L1(self):
        return max(self.P_L1, default=0.0)

    @property
    def max_S_L2(self):
        return max(self.S_L2, default=0.0)

    @property
    def max_psi_L2(self):
        return max(self.psi_L2, default=0.0)


def phase_distance(a, b, alpha, weight):
    """Gauge-aligned L2 distance between two phases S, compared modulo 2 pi alpha.

    The weight-averaged offset is removed before measuring; weight zero marks
    points excluded from the comparison.
    """
    grid = a.grid
    difference = alpha * np.angle(np.exp(1j * (a.values - b.values) / alpha))
    live = weight > 0
    offset = float(integrate_array(grid, weight * difference)) / float(integrate_array(grid, weight))
    aligned = alpha * np.angle(np.exp(1j * (difference - offset) / alpha))
    return math.sqrt(float(integrate_array(grid, np.where(live, aligned ** 2, 0.0))))


def cross_validate(state, config, horizon):
    """Evolve with rk4_PS and with the psi oracle; report their discrepancy over time."""
    if not config.quantum:
        return CrossValidationReport(False, "no wavefunction oracle exists for the classical_free Hamiltonian")
    P = state.P.values
    if float(np.min(P)) < NODE_FREE_RATIO * float(np.max(P)):
        raise NodeError(
            f"cross_validate needs a node-free state (min P >= {NODE_FREE_RATIO:g} max P)",
            int(np.count_nonzero(P < NODE_FREE_RATIO * np.max(P))),
        )
    if horizon < 0:
        raise EvolutionError(f"horizon must be non-negative, got {horizon}")

    steps = int(math.ceil(horizon / config.dt - 1e-9)) if horizon > 0 else 0
    dt = horizon / steps if steps else config.dt
    direct = evolve(state, replace(config, integrator="rk4_PS", dt=dt, steps=steps))
    oracle = evolve(state, replace(config, integrator="crank_nicolson_psi", dt=dt, steps=steps))

    grid = state.grid
    P_L1, S_L2, psi_L2 = [], [], []
    for ps_state, psi, cn_state in zip(direct.states, oracle.wavefunctions, oracle.states):
        P_L1.append(float(integrate_array(grid, np.abs(ps_state.P.values - cn_state.P.values))))
        live = ~(node_mask(ps_state.P.values) | node_mask(cn_state.P.values))
        S_L2.append(phase_distance(ps_state.S, cn_state.S, state.alpha, live.astype(float)))
        gap = madelung_forward(ps_state).values - psi.values
        psi_L2.append(math.sqrt(float(integrate_array(grid, np.abs(gap) ** 2))))

    report = CrossValidationReport(
        True, "", tuple(direct.times), tuple(P_L1), tuple(S_L2), tuple(psi_L2),
        direct_conserved=tuple(direct.conserved), oracle_conserved=tuple(oracle.conserved),
    )
    logger.info(
        f"Cross-validation over t={horizon:g}: max psi L2 {report.max_psi_L2:.3e}, "
        f"max P L1 {report.max_P_L1:.3e}, max S L2 {report.max_S_L2:.3e}"
    )
    return report


# === CLOSED FORMS AND SYMMETRIES ===

def gaussian_width(sigma0, t, alpha, mass):
    """sigma(t) = sqrt(sigma0^2 + (alpha t / 2 m sigma0)^2) for a free Gaussian packet."""
    return math.sqrt(sigma0 ** 2 + (alpha * t / (2.0 * mass * sigma0)) ** 2)


def galilean_boost(state, velocity, mass):
    """S -> S + m v . x."""
    grid = state.grid
    velocity = np.broadcast_to(np.asarray(velocity, dtype=float), (grid.dim,))
    shift = sum(mass * v * axis_coordinate(grid, axis) for axis, v in enumerate(velocity))
    return state.with_fields(S=state.S + shift)


@dataclass(frozen=True)
class CovarianceReport:
    velocity: tuple
    times: tuple
    gaps: tuple

    @property
    def max_gap(self):
        return max(self.gaps, default=0.0)


def _boost_fits_box(grid, velocity, mass, alpha):
    for axis, v in enumerate(velocity):
        winding = mass * v * grid.extents[axis] / (2.0 * math.pi * alpha)
        if abs(winding - round(winding)) > 1e-9:
            raise EvolutionError(
                f"Boost phase m v L / (2 pi alpha) = {winding:.6g} on axis {axis} must be an integer on a periodic grid"
            )


def galilean_covariance(state, config, velocity, horizon):
    """Evolve state and its boost; compare the boosted run with the comoving, rephased original.

    The boosted wavefunction at time t should equal
    psi(x - v t, t) exp(i (m v . x - m |v|^2 t / 2) / alpha). Both runs use the
    psi path, since a boost phase winds around the box and S cannot carry it
    as a periodic field. gaps holds the L2 distance at every saved time.
    """
    if not config.quantum:
        raise EvolutionError("galilean_covariance compares wavefunctions; use hamiltonian = quantum_free")
    _check_alpha(state, config)
    grid = state.grid
    if not grid.periodic:
        raise EvolutionError("galilean_covariance needs a periodic grid")
    if horizon < 0:
        raise EvolutionError(f"horizon must be non-negative, got {horizon}")
    velocity = tuple(float(v) for v in np.broadcast_to(np.asarray(velocity, dtype=float), (grid.dim,)))
    _boost_fits_box(grid, velocity, config.mass, config.alpha)

    steps = int(math.ceil(horizon / config.dt - 1e-9)) if horizon > 0 else 0
    dt = horizon / steps if steps else config.dt
    oracle = replace(config, integrator="crank_nicolson_psi", dt=dt, steps=steps)
    plain = evolve(state, oracle)
    boosted = evolve(galilean_boost(state, velocity, config.mass), oracle)

    mass, alpha = config.mass, config.alpha
    drift_phase = sum(mass * v * axis_coordinate(grid, axis) for axis, v in enumerate(velocity))
    speed2 = sum(v * v for v in velocity)
    gaps = []
    for t, psi, moved in zip(plain.times, plain.wavefunctions, boosted.wavefunctions):
        comoving = fourier_shift_array(grid, psi.values, [v * t for v in velocity])
        expected = comoving * np.exp(1j * (drift_phase - 0.5 * mass * speed2 * t) / alpha)
        gaps.append(math.sqrt(float(integrate_array(grid, np.abs(moved.values - expected) ** 2))))

    report = CovarianceReport(velocity, tuple(plain.times), tuple(gaps))
    logger.info(f"Galilean covariance at v={velocity}: max psi L2 gap {report.max_gap:.3e}")
    return report
