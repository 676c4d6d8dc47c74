"""
Scenario runners.

Each runner takes a validated ScenarioConfig and a RunReport, performs one
named experiment with a seeded numpy Generator, and records every measured
residual against its tolerance. run() wires config -> router -> report ->
CSV files.
"""

import logging
import math
import re
from dataclasses import dataclass, replace

import numpy as np

from probability_geometry.canonical import (
    build_galilean_generators,
    galilean_algebra_residual,
    gauge_invariance_check,
    homogeneity_check,
    local_density_check,
    node_admissibility_check,
    squared_norm_observable,
)
from probability_geometry.dynamics import (
    cross_validate,
    evolve,
    free_particle_hamiltonian,
    galilean_covariance,
    gaussian_width,
    wavefunction_quantities,
)
from probability_geometry.field_io import AXIS_NAMES, read_state
from probability_geometry.fields import ScalarField, madelung_forward
from probability_geometry.grid import GridSpec
from probability_geometry.hilbert import dirac_product, inner_product_direct, kahler_contraction, norm
from probability_geometry.infogeo import (
    fisher_metric_shifted,
    fisher_metric_translation,
    induced_param_metric,
    jeffreys_line_element,
    translation_perturbation,
)
from probability_geometry.kahler import (
    appendix_construct,
    build_general_triple,
    canonical_symplectic,
    compatible_pair,
    complex_coordinate_blocks,
    from_complex_coordinates,
    intermediate_J,
    random_spd,
    verify_kahler,
)
from probability_geometry.states import (
    fourier_modulation,
    gaussian_state,
    periodic_gaussian_state,
    random_amplitude,
    random_complex_field,
    random_smooth_state,
    random_wavefunction,
    uniform_state,
    wrapped_gaussian_state,
    wrapped_gaussian_wavefunction,
)

from .config import load_config
from .errors import ConfigError
from .reporting import RunReport, emit_plotdata
from .router import ScenarioRouter

logger = logging.getLogger("scenario_layer.runner")


# === TOLERANCES ===

FISHER_CLOSED_FORM_TOLERANCE = 1e-6
TRANSLATION_INVARIANCE_TOLERANCE = 1e-8
LINE_ELEMENT_TOLERANCE = 1e-8
INDUCED_METRIC_TOLERANCE = 1e-10
PSI_HAMILTONIAN_TOLERANCE = 1e-8
PSD_TOLERANCE = 1e-10

BRACKET_TOLERANCE = 1e-6
GAUGE_TOLERANCE = 1e-10
HOMOGENEITY_TOLERANCE = 1e-10
LOCAL_DENSITY_TOLERANCE = 1e-9
NODE_ADMISSIBILITY_TOLERANCE = 1e-6

KAHLER_TOLERANCE = 1e-12
FLAT_TRIPLE_TOLERANCE = 1e-13
INTERMEDIATE_J_TOLERANCE = 1e-13
DEFECT_SIZE = 1e-2
DEFECT_DETECTION = 1e-3
APPENDIX_DIMENSIONS = (2, 4, 6, 8, 10)

SIGMA_TOLERANCE = 1e-4
NORM_TOLERANCE = 1e-9
ENERGY_TOLERANCE = 1e-6
MOMENTUM_TOLERANCE = 1e-6
WIDTH_TOLERANCE = 1e-3
COVARIANCE_TOLERANCE = 1e-4
COVARIANCE_SAMPLES = 10

PSI_DISCREPANCY_TOLERANCE = 1e-4
SIGMA_GROWTH = 0.5
REFINEMENT_ORDER = 1.7
REFINEMENT_HORIZON = 0.5

ROUTE_TOLERANCE = 1e-12
DIRAC_NORM_TOLERANCE = 1e-9
EVOLUTION_INVARIANCE_TOLERANCE = 1e-8

TINY = 1e-300


def _relative(value, reference):
    return abs(value - reference) / max(abs(reference), TINY)


def initial_state(config, rng, grid=None):
    """Build the configured initial EnsembleState on grid (default: the config grid)."""
    grid = grid or config.grid
    state_spec = config.initial_state
    alpha = config.alpha
    if state_spec.family == "gaussian":
        return gaussian_state(grid, alpha, state_spec.center, state_spec.sigma, state_spec.momentum)
    if state_spec.family == "periodic_gaussian":
        return periodic_gaussian_state(grid, alpha, state_spec.center, state_spec.sigma)
    if state_spec.family == "wrapped_gaussian":
        return wrapped_gaussian_state(grid, alpha, state_spec.center, state_spec.sigma)
    if state_spec.family == "uniform":
        return uniform_state(grid, alpha, state_spec.momentum)
    if state_spec.family == "random":
        return random_smooth_state(grid, alpha, rng)
    try:
        return read_state(state_spec.path, grid, alpha)
    except OSError as exc:
        raise ConfigError(f"Cannot read initial state {state_spec.path}: {exc.strerror or exc}", key="initial_state.path") from exc


# === INFORMATION GEOMETRY ===

def run_fisher_check(config, report):
    grid, alpha, mass = config.grid, config.alpha, config.mass
    rng = np.random.default_rng(config.seed)
    sigma = config.initial_state.sigma

    gaussian = gaussian_state(grid, alpha, config.initial_state.center, sigma)
    gamma = fisher_metric_translation(gaussian.P, alpha)
    expected = 0.5 * alpha / sigma ** 2
    report.add_table("gamma_gaussian.csv", AXIS_NAMES[: grid.dim], gamma.entries.tolist())
    report.add_check(
        "fisher_gaussian_closed_form",
        float(np.max(np.abs(gamma.entries - expected * np.eye(grid.dim)))) / expected,
        FISHER_CLOSED_FORM_TOLERANCE,
    )
    induced = induced_param_metric(gaussian)
    report.add_check(
        "induced_metric_zero_phase",
        float(np.max(np.abs(induced.entries - gamma.entries))) / expected,
        INDUCED_METRIC_TOLERANCE,
    )
    report.add_check(
        "hamiltonian_gaussian_closed_form",
        _relative(free_particle_hamiltonian(gaussian, mass), grid.dim * alpha ** 2 / (8.0 * mass * sigma ** 2)),
        FISHER_CLOSED_FORM_TOLERANCE,
    )

    rows = []
    worst = {"shift": 0.0, "line": 0.0, "induced": 0.0, "psi": 0.0}
    lowest_eigenvalue = math.inf
    for sample in range(config.samples):
        state = random_smooth_state(grid, alpha, rng)
        gamma = fisher_metric_translation(state.P, alpha)
        scale = max(float(np.max(np.abs(gamma.entries))), TINY)
        lowest_eigenvalue = min(lowest_eigenvalue, float(np.min(gamma.eigenvalues())))

        shift_residual = math.nan
        if grid.periodic:
            shifts = [int(rng.integers(1, n)) for n in grid.points]
            shifted = fisher_metric_shifted(state.P, shifts, alpha)
            shift_residual = float(np.max(np.abs(shifted.entries - gamma.entries))) / scale
            worst["shift"] = max(worst["shift"], shift_residual)

        delta = rng.normal(size=grid.dim)
        line_element = jeffreys_line_element(state.P, translation_perturbation(state.P, delta), alpha)
        line_residual = _relative(line_element, gamma.quadratic_form(delta))

        H = free_particle_hamiltonian(state, mass)
        induced_residual = _relative(alpha / (4.0 * mass) * induced_param_metric(state).trace(), H)
        psi_residual = _relative(wavefunction_quantities(madelung_forward(state), config.evolution, 0.0).H, H)

        worst["line"] = max(worst["line"], line_residual)
        worst["induced"] = max(worst["induced"], induced_residual)
        worst["psi"] = max(worst["psi"], psi_residual)
        rows.append([sample, gamma.trace(), shift_residual, line_residual, induced_residual, psi_residual,
                     gamma.truncated_mass])

    report.add_table(
        "fisher_samples.csv",
        ("sample", "gamma_trace", "shift_residual", "line_element_residual", "induced_residual",
         "psi_hamiltonian_residual", "truncated_mass"),
        rows,
    )
    if grid.periodic:
        report.add_check("fisher_translation_invariance", worst["shift"], TRANSLATION_INVARIANCE_TOLERANCE)
    else:
        logger.info("Translation invariance needs a periodic grid; check skipped")
    report.add_check("line_element_vs_fisher", worst["line"], LINE_ELEMENT_TOLERANCE)
    report.add_check("induced_trace_vs_hamiltonian", worst["induced"], INDUCED_METRIC_TOLERANCE)
    report.add_check("hamiltonian_psi_route", worst["psi"], PSI_HAMILTONIAN_TOLERANCE)
    report.add_check("fisher_min_eigenvalue", lowest_eigenvalue, -PSD_TOLERANCE, ">=")


# === CANONICAL STRUCTURE ===

_AXIS_SUFFIX = re.compile(r"_[xyz]")


def relation_family(name):
    """'{L_x,A_y}' -> 'L_A'."""
    return _AXIS_SUFFIX.sub("", name).strip("{}").replace(",", "_")


def _companion_grid(grid):
    """Periodic spectral grid of the same size, for identities that need exact summation by parts."""
    return GridSpec(grid.dim, grid.extents, grid.points, boundary="periodic", scheme="spectral")


def run_algebra_check(config, report):
    grid, alpha = config.grid, config.alpha
    rng = np.random.default_rng(config.seed)
    generators = build_galilean_generators(config.mass, config.time, alpha, config.evolution.hamiltonian)

    worst = {}
    rows = []
    for sample in range(config.samples):
        state = random_smooth_state(grid, alpha, rng)
        residuals = galilean_algebra_residual(generators, state)
        for relation in residuals.relations:
            family = relation_family(relation.name)
            worst[family] = max(worst.get(family, 0.0), relation.relative)
            rows.append([sample, relation.name, relation.lhs, relation.rhs, relation.residual, relation.relative])
        logger.debug(f"Sample {sample}: worst relation {residuals.worst().name}")
    report.add_table("algebra_residuals.csv", ("sample", "relation", "lhs", "rhs", "residual", "relative"), rows)
    for family, relative in worst.items():
        report.add_check(f"bracket_{family}", relative, BRACKET_TOLERANCE)

    companion = _companion_grid(grid)
    smooth = random_smooth_state(companion, alpha, rng)
    results = []
    for observable in generators.observables():
        results.append(gauge_invariance_check(observable, smooth))
        if observable.homogeneous:
            results.append(homogeneity_check(observable, smooth))
            results.append(local_density_check(observable, smooth))

    nodal = gaussian_state(grid, alpha, sigma=config.initial_state.sigma, momentum=config.initial_state.momentum)
    logger.info(f"Node admissibility state has {int(nodal.nodes().sum())} node points")
    for observable in generators.observables():
        results.append(node_admissibility_check(observable, nodal))

    counterexample = homogeneity_check(squared_norm_observable(), smooth)
    report.add_table(
        "admissibility.csv",
        ("check", "residual", "relative", "tolerance", "status"),
        [[r.name, r.residual, r.relative, r.tolerance, "PASS" if r.passed else "FAIL"]
         for r in results + [counterexample]],
    )

    def worst_of(prefix):
        return max(r.relative for r in results if r.name.startswith(prefix))

    report.add_check("admissibility_gauge", worst_of("gauge("), GAUGE_TOLERANCE)
    report.add_check("admissibility_homogeneity", worst_of("homogeneity("), HOMOGENEITY_TOLERANCE)
    report.add_check("admissibility_local_density", worst_of("local_density("), LOCAL_DENSITY_TOLERANCE)
    report.add_check("admissibility_nodes", worst_of("node_admissibility("), NODE_ADMISSIBILITY_TOLERANCE)
    report.add_check("counterexample_homogeneity_violated", counterexample.relative, HOMOGENEITY_TOLERANCE, ">=")


# === KAHLER STRUCTURE ===

def _location_text(location):
    return ";".join(str(i) for i in location)


def run_kahler_check(config, report):
    grid, alpha = config.grid, config.alpha
    rng = np.random.default_rng(config.seed)
    zero = ScalarField.constant(grid, 0.0)
    identity = np.eye(2)

    worst = {}
    flat_worst = 0.0
    j_worst = 0.0
    defect_lowest = math.inf
    rows = []
    for sample in range(config.samples):
        state = random_smooth_state(grid, alpha, rng)
        A = random_amplitude(grid, rng)
        triple = build_general_triple(state.P, A, alpha)
        for condition in triple.verify().conditions:
            worst[condition.name] = max(worst.get(condition.name, 0.0), condition.max_residual)
            rows.append([sample, condition.name, condition.max_residual, _location_text(condition.location)])

        flat_worst = max(flat_worst, build_general_triple(state.P, zero, alpha).verify().max_residual)

        sign = -1.0 if sample % 2 else 1.0
        C = ScalarField(grid, sign * np.exp(fourier_modulation(grid, rng)))
        J = intermediate_J(A, C)
        j_worst = max(j_worst, float(np.max(np.abs(J @ J + identity))))

        defective = np.array(triple.J)
        defective[..., 0, 1] += DEFECT_SIZE
        defect_lowest = min(defect_lowest, verify_kahler(triple.omega, triple.g, defective).max_residual)

    report.add_table("kahler_residuals.csv", ("sample", "condition", "max_residual", "location"), rows)
    for name, residual in worst.items():
        report.add_check(f"kahler_{name}", residual, KAHLER_TOLERANCE)
    report.add_check("kahler_flat_triple", flat_worst, FLAT_TRIPLE_TOLERANCE)
    report.add_check("intermediate_J_square", j_worst, INTERMEDIATE_J_TOLERANCE)
    report.add_check("defect_detection", defect_lowest, DEFECT_DETECTION, ">=")

    appendix_rows = []
    compatible_worst = 0.0
    incompatible_lowest = math.inf
    for n in APPENDIX_DIMENSIONS:
        omega, g = compatible_pair(n, rng)
        result = appendix_construct(omega, g)
        compatible_worst = max(compatible_worst, result.report.max_residual)
        appendix_rows.append([n, "compatible", result.report.max_residual, result.compatible])

        result = appendix_construct(canonical_symplectic(n), random_spd(n, rng))
        incompatible_lowest = min(incompatible_lowest, result.report.max_residual)
        appendix_rows.append([n, "generic", result.report.max_residual, result.compatible])
        if not result.compatible:
            logger.info(f"Generic pair in dimension {n} flagged incompatible")
    report.add_table("appendix.csv", ("n", "pair", "max_residual", "compatible"), appendix_rows)
    report.add_check("appendix_compatible", compatible_worst, KAHLER_TOLERANCE)
    report.add_check("appendix_incompatible_flagged", incompatible_lowest, DEFECT_DETECTION, ">=")


def run_flat_coords_check(config, report):
    grid, alpha = config.grid, config.alpha
    rng = np.random.default_rng(config.seed)
    zero = ScalarField.constant(grid, 0.0)
    scale = max(1.0, alpha)

    rows = []
    deviation_worst = 0.0
    roundtrip_worst = 0.0
    for sample in range(config.samples):
        state = random_smooth_state(grid, alpha, rng)
        triple = build_general_triple(state.P, zero, alpha)
        flat = complex_coordinate_blocks(triple, state)
        deviation = flat.deviation(alpha) / scale

        omega, g, J = from_complex_coordinates(flat, state)
        size = max(1.0, float(np.max(np.abs(triple.g))), float(np.max(np.abs(triple.J))))
        roundtrip = max(
            float(np.max(np.abs(omega - triple.omega))),
            float(np.max(np.abs(g - triple.g))),
            float(np.max(np.abs(J - triple.J))),
        ) / size

        deviation_worst = max(deviation_worst, deviation)
        roundtrip_worst = max(roundtrip_worst, roundtrip)
        rows.append([sample, deviation, roundtrip])

    report.add_table("flat_coords.csv", ("sample", "deviation", "roundtrip"), rows)
    report.add_check("flat_blocks_deviation", deviation_worst, KAHLER_TOLERANCE)
    report.add_check("flat_roundtrip", roundtrip_worst, KAHLER_TOLERANCE)


# === DYNAMICS ===

def _snapshot_trajectory(report, trajectory, dt):
    for t, state in zip(trajectory.times, trajectory.states):
        report.add_snapshot(int(round(t / dt)), state)


def _drift_checks(report, conserved, suffix=""):
    first = conserved[0]
    norm_drift = max(abs(c.norm - first.norm) for c in conserved)
    energy_drift = max(abs(c.H - first.H) for c in conserved) / max(abs(first.H), TINY)
    momentum_scale = max([1.0] + [abs(a) for a in first.A])
    momentum_drift = max(max(abs(a - b) for a, b in zip(c.A, first.A)) for c in conserved) / momentum_scale
    report.add_check(f"norm_drift{suffix}", norm_drift, NORM_TOLERANCE)
    report.add_check(f"energy_drift{suffix}", energy_drift, ENERGY_TOLERANCE)
    report.add_check(f"momentum_drift{suffix}", momentum_drift, MOMENTUM_TOLERANCE)


def _center_rows(trajectory, velocity):
    origin = trajectory.conserved[0].center
    rows = []
    worst = 0.0
    for c in trajectory.conserved:
        expected = [x0 + v * c.t for x0, v in zip(origin, velocity)]
        worst = max(worst, max(abs(x - e) for x, e in zip(c.center, expected)))
        rows.append([c.t, *c.center, *expected])
    return rows, worst


def _center_header(dim):
    names = AXIS_NAMES[:dim]
    return ("t", *(f"center_{n}" for n in names), *(f"expected_{n}" for n in names))


def run_gaussian_spread(config, report):
    grid, alpha, mass = config.grid, config.alpha, config.mass
    rng = np.random.default_rng(config.seed)
    state = initial_state(config, rng)
    trajectory = evolve(state, config.evolution)

    sigma0 = config.initial_state.sigma
    sigma_rows = []
    sigma_worst = 0.0
    for c in trajectory.conserved:
        analytic = math.sqrt(grid.dim) * gaussian_width(sigma0, c.t, alpha, mass)
        sigma_worst = max(sigma_worst, _relative(c.sigma, analytic))
        sigma_rows.append([c.t, c.sigma, analytic])

    velocity = [p / mass for p in config.initial_state.momentum]
    center_rows, center_worst = _center_rows(trajectory, velocity)

    report.add_conserved("conserved.csv", trajectory.conserved)
    report.add_table("sigma.csv", ("t", "sigma_measured", "sigma_analytic"), sigma_rows)
    report.add_table("center.csv", _center_header(grid.dim), center_rows)
    _snapshot_trajectory(report, trajectory, config.evolution.dt)

    report.add_check("sigma_closed_form", sigma_worst, SIGMA_TOLERANCE)
    _drift_checks(report, trajectory.conserved)
    report.add_check("center_drift", center_worst, grid.min_spacing)
    _covariance_check(config, report, state)


def _covariance_check(config, report, state):
    """Boost by one phase winding per axis and compare against the comoving trajectory."""
    grid = config.grid
    if not grid.periodic or not config.evolution.quantum:
        logger.info("Galilean covariance needs a periodic grid and the quantum Hamiltonian; skipped")
        return
    velocity = [2.0 * math.pi * config.alpha / (config.mass * length) for length in grid.extents]
    evolution = replace(config.evolution, save_every=max(1, config.evolution.steps // COVARIANCE_SAMPLES))
    result = galilean_covariance(state, evolution, velocity, config.horizon)
    report.add_table("covariance.csv", ("t", "psi_L2_gap"), [list(row) for row in zip(result.times, result.gaps)])
    report.add_check("galilean_covariance", result.max_gap, COVARIANCE_TOLERANCE)



def run_classical_advect(config, report):
    grid, mass = config.grid, config.mass
    rng = np.random.default_rng(config.seed)
    state = initial_state(config, rng)
    trajectory = evolve(state, config.evolution)

    sigma0 = trajectory.conserved[0].sigma
    sigma_rows = [[c.t, c.sigma, sigma0] for c in trajectory.conserved]
    width_change = max(_relative(c.sigma, sigma0) for c in trajectory.conserved)
    velocity = [p / mass for p in config.initial_state.momentum]
    center_rows, center_worst = _center_rows(trajectory, velocity)

    report.add_conserved("conserved.csv", trajectory.conserved)
    report.add_table("sigma.csv", ("t", "sigma_measured", "sigma_initial"), sigma_rows)
    report.add_table("center.csv", _center_header(grid.dim), center_rows)
    _snapshot_trajectory(report, trajectory, config.evolution.dt)

    report.add_check("center_drift", center_worst, grid.min_spacing)
    report.add_check("width_change", width_change, WIDTH_TOLERANCE)
    _drift_checks(report, trajectory.conserved)


def refinement_study(config, horizon=REFINEMENT_HORIZON):
    """psi discrepancy on a second-order central grid and on one with half the spacing.

    Returns:
        list of (points, spacing, max psi L2) rows, coarse first, and the observed order.
    """
    coarse = GridSpec(config.grid.dim, config.grid.extents, config.grid.points, config.grid.boundary,
                      config.grid.lower, scheme="central", stencil_order=2)
    fine = replace(coarse, points=tuple(2 * n for n in coarse.points))
    horizon = min(horizon, config.horizon) if config.horizon > 0 else horizon
    evolution = replace(config.evolution, dt=min(config.evolution.dt, config.evolution.max_stable_dt(fine)))

    rows = []
    for grid in (coarse, fine):
        state = initial_state(config, np.random.default_rng(config.seed), grid)
        result = cross_validate(state, evolution, horizon)
        rows.append([grid.points[0], grid.spacing[0], result.max_psi_L2])
        logger.info(f"Refinement at {grid.points}: psi L2 {result.max_psi_L2:.3e}")
    order = math.log2(rows[0][2] / max(rows[1][2], TINY))
    return rows, order


def _closed_form_sigma(config, t):
    """sigma(t) of the configured packet under free evolution, or None for families without one."""
    spec = config.initial_state
    if spec.family == "wrapped_gaussian":
        psi = wrapped_gaussian_wavefunction(config.grid, config.alpha, config.mass, spec.sigma, t, spec.center)
        return wavefunction_quantities(psi, config.evolution, t).sigma
    return None


def run_cross_validate(config, report):
    rng = np.random.default_rng(config.seed)
    state = initial_state(config, rng)
    result = cross_validate(state, config.evolution, config.horizon)
    if not result.applicable:
        logger.warning(f"Cross-validation not applicable: {result.reason}")
        report.add_table("cross_validation.csv", ("note",), [[result.reason]])
        return

    report.add_table(
        "cross_validation.csv",
        ("t", "psi_L2", "P_L1", "S_L2"),
        [list(row) for row in zip(result.times, result.psi_L2, result.P_L1, result.S_L2)],
    )
    report.add_conserved("conserved.csv", result.direct_conserved)
    report.add_conserved("conserved_oracle.csv", result.oracle_conserved)

    sigma_rows = []
    sigma_worst = None
    for direct, oracle in zip(result.direct_conserved, result.oracle_conserved):
        analytic = _closed_form_sigma(config, direct.t)
        if analytic is not None:
            sigma_worst = max(sigma_worst or 0.0, _relative(direct.sigma, analytic))
        sigma_rows.append([direct.t, direct.sigma, oracle.sigma, analytic])
    report.add_table("sigma.csv", ("t", "sigma_direct", "sigma_oracle", "sigma_analytic"), sigma_rows)

    report.add_check("psi_l2_discrepancy", result.max_psi_L2, PSI_DISCREPANCY_TOLERANCE)
    if sigma_worst is not None:
        report.add_check("sigma_closed_form", sigma_worst, SIGMA_TOLERANCE)
    _drift_checks(report, result.direct_conserved)
    _drift_checks(report, result.oracle_conserved, suffix="_oracle")
    growth = result.direct_conserved[-1].sigma / result.direct_conserved[0].sigma - 1.0
    report.add_check("sigma_growth", growth, SIGMA_GROWTH, ">=")

    if config.refinement:
        rows, order = refinement_study(config)
        report.add_table("refinement.csv", ("points", "dx", "psi_L2"), rows)
        report.add_check("refinement_order", order, REFINEMENT_ORDER, ">=")


# === HILBERT SPACE ===

def run_dirac_check(config, report):
    grid, alpha = config.grid, config.alpha
    rng = np.random.default_rng(config.seed)

    worst = {"route": 0.0, "sesquilinear": 0.0, "hermitian": 0.0, "imaginary": 0.0}
    lowest_norm = math.inf
    rows = []
    for sample in range(config.samples):
        phi = random_complex_field(grid, rng)
        phi2 = random_complex_field(grid, rng)
        psi = random_complex_field(grid, rng)
        a, b = rng.normal(size=2) + 1j * rng.normal(size=2)

        size_phi = math.sqrt(abs(inner_product_direct(phi, phi)))
        size_phi2 = math.sqrt(abs(inner_product_direct(phi2, phi2)))
        size_psi = math.sqrt(abs(inner_product_direct(psi, psi)))

        via_kahler = kahler_contraction(phi, psi, alpha)
        direct = inner_product_direct(phi, psi)
        route = abs(via_kahler - direct) / (size_phi * size_psi)

        combined = phi.with_values(a * phi.values + b * phi2.values)
        lhs = dirac_product(combined, psi, alpha)
        rhs = np.conj(a) * dirac_product(phi, psi, alpha) + np.conj(b) * dirac_product(phi2, psi, alpha)
        sesquilinear = abs(lhs - rhs) / ((abs(a) * size_phi + abs(b) * size_phi2) * size_psi)

        product = dirac_product(phi, psi, alpha)
        hermitian = abs(product - np.conj(dirac_product(psi, phi, alpha))) / (size_phi * size_psi)

        self_product = dirac_product(psi, psi, alpha)
        imaginary = abs(self_product.imag) / max(abs(self_product.real), TINY)

        worst["route"] = max(worst["route"], route)
        worst["sesquilinear"] = max(worst["sesquilinear"], sesquilinear)
        worst["hermitian"] = max(worst["hermitian"], hermitian)
        worst["imaginary"] = max(worst["imaginary"], imaginary)
        lowest_norm = min(lowest_norm, self_product.real)
        rows.append([sample, via_kahler.real, via_kahler.imag, direct.real, direct.imag, route])

    report.add_table("dirac_samples.csv", ("sample", "kahler_re", "kahler_im", "direct_re", "direct_im", "route_gap"), rows)
    report.add_check("dirac_route_agreement", worst["route"], ROUTE_TOLERANCE)
    report.add_check("dirac_sesquilinearity", worst["sesquilinear"], ROUTE_TOLERANCE)
    report.add_check("dirac_hermitian_symmetry", worst["hermitian"], ROUTE_TOLERANCE)
    report.add_check("dirac_self_product_imaginary", worst["imaginary"], ROUTE_TOLERANCE)
    report.add_check("dirac_positivity", lowest_norm, 0.0, ">=")

    normalized = random_wavefunction(grid, alpha, rng)
    report.add_check("dirac_normalized_norm", abs(norm(normalized, alpha) - 1.0), DIRAC_NORM_TOLERANCE)

    oracle = replace(config.evolution, hamiltonian="quantum_free", integrator="crank_nicolson_psi")
    first = evolve(random_smooth_state(grid, alpha, rng), oracle)
    second = evolve(random_smooth_state(grid, alpha, rng), oracle)
    start = dirac_product(first.wavefunctions[0], second.wavefunctions[0], alpha)
    evolution_rows = []
    drift = 0.0
    for t, phi_t, psi_t in zip(first.times, first.wavefunctions, second.wavefunctions):
        value = dirac_product(phi_t, psi_t, alpha)
        drift = max(drift, abs(value - start))
        evolution_rows.append([t, value.real, value.imag, abs(value - start)])
    report.add_table("dirac_evolution.csv", ("t", "re", "im", "deviation"), evolution_rows)
    report.add_check("dirac_evolution_invariance", drift, EVOLUTION_INVARIANCE_TOLERANCE)


# === ENTRY ===

router = ScenarioRouter()
router.register_many({
    "fisher_check": run_fisher_check,
    "algebra_check": run_algebra_check,
    "kahler_check": run_kahler_check,
    "flat_coords_check": run_flat_coords_check,
    "gaussian_spread": run_gaussian_spread,
    "classical_advect": run_classical_advect,
    "cross_validate": run_cross_validate,
    "dirac_check": run_dirac_check,
})


@dataclass(frozen=True)
class RunResult:
    name: str
    status: str
    checks: tuple
    output_dir: object
    files: tuple

    @property
    def passed(self):
        return self.status == "PASS"

    @property
    def exit_code(self):
        return 0 if self.passed else 1

    def summary_lines(self):
        lines = [f"{self.name}: {self.status}"]
        lines.extend(f"  {c.status} {c.check} = {c.value:.3e} ({c.comparison} {c.tolerance:.1e})" for c in self.checks)
        return lines


def run(config, emit=True):
    """Execute a scenario and write its CSV outputs.

    Returns:
        RunResult with PASS when every check passed.
    """
    logger.info(f"Running {config.description}")
    report = RunReport(config.name, config.parameters)
    router.dispatch(config, report)
    files = emit_plotdata(report, config.output_dir) if emit else []
    result = RunResult(config.name, report.status, tuple(report.checks), config.output_dir, tuple(files))
    if result.passed:
        logger.info(f"{config.name}: all {len(report.checks)} checks passed")
    else:
        logger.error(f"{config.name}: {len(report.failures())} of {len(report.checks)} checks failed")
    return result


def run_file(path, emit=True):
    return run(load_config(path), emit=emit)
