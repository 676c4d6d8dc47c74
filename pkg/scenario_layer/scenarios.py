"""
Scenario table: the named experiments the runner can execute.

Each scenario has a description and a defaults table, one dict per config
section. A config file only needs to name the scenario and give the
physics constants; everything else falls back to these defaults.
"""

import math


SCENARIOS = {
    "fisher_check": {
        "description": "Fisher-Rao metric: Gaussian closed form, translation invariance, "
                       "line-element and induced-metric consistency on seeded states",
        "defaults": {
            "scenario": {"seed": 0, "samples": 20},
            "grid": {"dim": 1, "extent": (20.0,), "points": (256,), "boundary": "periodic",
                     "scheme": "spectral", "stencil_order": 2},
            "physics": {"time": 0.0},
            "initial_state": {"family": "gaussian", "sigma": 1.0, "momentum": (0.0,)},
            "evolution": {},
        },
    },
    "algebra_check": {
        "description": "Galilean algebra: nine Poisson-bracket relation families with the quantum H, "
                       "plus observable admissibility (gauge, homogeneity, local density, nodes)",
        "defaults": {
            "scenario": {"seed": 0, "samples": 10},
            "grid": {"dim": 2, "extent": (14.0,), "points": (160,), "boundary": "vanishing",
                     "scheme": "central", "stencil_order": 8},
            "physics": {"time": 0.7},
            "initial_state": {"family": "random"},
            "evolution": {"hamiltonian": "quantum_free"},
        },
    },
    "kahler_check": {
        "description": "Kahler conditions on general (P, A) triples, the intermediate J, "
                       "injected defects and the finite-dimensional construction",
        "defaults": {
            "scenario": {"seed": 42, "samples": 50},
            "grid": {"dim": 1, "extent": (10.0,), "points": (128,), "boundary": "periodic",
                     "scheme": "central", "stencil_order": 2},
            "physics": {"time": 0.0},
            "initial_state": {"family": "random"},
            "evolution": {},
        },
    },
    "flat_coords_check": {
        "description": "Madelung complex coordinates flatten the A = 0 triple to constant blocks",
        "defaults": {
            "scenario": {"seed": 0, "samples": 10},
            "grid": {"dim": 1, "extent": (10.0,), "points": (128,), "boundary": "periodic",
                     "scheme": "central", "stencil_order": 2},
            "physics": {"time": 0.0},
            "initial_state": {"family": "random"},
            "evolution": {},
        },
    },
    "gaussian_spread": {
        "description": "Free Gaussian packet under the Schrodinger oracle: sigma(t) against the closed form",
        "defaults": {
            "scenario": {"seed": 0, "samples": 1},
            "grid": {"dim": 1, "extent": (40.0,), "points": (256,), "boundary": "periodic",
                     "scheme": "spectral", "stencil_order": 2},
            "physics": {"time": 0.0},
            "initial_state": {"family": "gaussian", "sigma": 1.0, "momentum": (0.0,)},
            "evolution": {"hamiltonian": "quantum_free", "integrator": "crank_nicolson_psi",
                          "dt": 0.01, "horizon": 2.0 * math.sqrt(3.0), "save_every": 10},
        },
    },
    "classical_advect": {
        "description": "Classical (alpha -> 0) ensemble: a Gaussian with S = p.x advects rigidly",
        "defaults": {
            "scenario": {"seed": 0, "samples": 1},
            "grid": {"dim": 1, "extent": (16.0,), "points": (256,), "boundary": "vanishing",
                     "scheme": "central", "stencil_order": 8},
            "physics": {"time": 0.0},
            "initial_state": {"family": "gaussian", "center": (-1.0,), "sigma": 1.0, "momentum": (1.0,)},
            "evolution": {"hamiltonian": "classical_free", "integrator": "rk4_PS",
                          "dt": 0.01, "horizon": 2.0, "save_every": 20},
        },
    },
    "cross_validate": {
        "description": "Direct (P, S) evolution against the Schrodinger oracle on a node-free wrapped Gaussian",
        "defaults": {
            "scenario": {"seed": 0, "samples": 1},
            "grid": {"dim": 1, "extent": (7.0,), "points": (48,), "boundary": "periodic",
                     "scheme": "spectral", "stencil_order": 2},
            "physics": {"time": 0.0},
            "initial_state": {"family": "wrapped_gaussian", "sigma": 1.0},
            "evolution": {"hamiltonian": "quantum_free", "integrator": "rk4_PS",
                          "dt": 0.0008, "horizon": 3.0, "save_every": 125, "refinement": False},
        },
    },
    "dirac_check": {
        "description": "Dirac product from g + i Omega: route agreement, sesquilinearity, "
                       "Hermitian symmetry, positivity and invariance under evolution",
        "defaults": {
            "scenario": {"seed": 0, "samples": 20},
            "grid": {"dim": 1, "extent": (10.0,), "points": (128,), "boundary": "periodic",
                     "scheme": "spectral", "stencil_order": 2},
            "physics": {"time": 0.0},
            "initial_state": {"family": "random"},
            "evolution": {"hamiltonian": "quantum_free", "integrator": "crank_nicolson_psi",
                          "dt": 0.01, "horizon": 1.0},
        },
    },
}

# Defaults shared by every scenario, under the per-scenario tables.
BASE_DEFAULTS = {
    "scenario": {"seed": 0, "samples": 1},
    "grid": {"dim": 1, "extent": (10.0,), "points": (128,), "boundary": "periodic",
             "scheme": "central", "stencil_order": 2},
    "physics": {"time": 0.0},
    "initial_state": {"family": "gaussian", "center": None, "sigma": 1.0, "momentum": (0.0,), "path": ""},
    "evolution": {"hamiltonian": "quantum_free", "integrator": "rk4_PS", "dt": 0.01, "steps": 0,
                  "horizon": 0.0, "save_every": 1, "cfl": 0.1, "refinement": False},
}


def get_scenario(name):
    """Get a scenario entry by name.

    Returns:
        dict with 'description' and 'defaults', or None if not found.
    """
    return SCENARIOS.get(name)


def list_scenarios():
    """List all scenarios with their descriptions.

    Returns:
        list of (name, description) tuples, in table order.
    """
    return [(name, data["description"]) for name, data in SCENARIOS.items()]


def scenario_defaults(name):
    """Merged defaults (base table overridden by the scenario's own)."""
    merged = {section: dict(values) for section, values in BASE_DEFAULTS.items()}
    for section, values in SCENARIOS[name]["defaults"].items():
        merged[section].update(values)
    return merged
