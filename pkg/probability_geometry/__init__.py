"""
Probability geometry: quantum theory reconstructed from the geometry of
evolving probability fields.

Modules:
  grid       configuration-space grid, quadrature, derivatives
  fields     P, S, psi and the Madelung transformation
  infogeo    Fisher-Rao metric, Jeffreys line element, induced metrics
  canonical  observables, Poisson brackets, Galilean generators
  kahler     (Omega, g, J) triples and their compatibility
  dynamics   ensemble Hamiltonians, (P, S) and psi evolution
  hilbert    the Dirac product induced by the Kahler structure
"""

from .errors import (
    GeometryError, GridError, FieldError, NodeError,
    StructureError, ConsistencyError, EvolutionError,
)
from .grid import GridSpec, gradient, laplacian, integrate, translate, laplacian_matrix
from .fields import (
    ScalarField, ComplexField, EnsembleState,
    madelung_forward, madelung_inverse, unwrap_phase, node_mask,
)
from .infogeo import (
    ParamMetric, fisher_metric_translation, jeffreys_line_element,
    metric_gPP, induced_param_metric,
)
from .canonical import (
    Observable, poisson_bracket, numeric_variational_derivative,
    build_galilean_generators, galilean_algebra_residual, apply_generator,
    homogeneity_check,
)
from .kahler import (
    KahlerTriple, FlatBlocks, build_general_triple, intermediate_J,
    verify_kahler, appendix_construct, to_complex_coordinates,
)
from .dynamics import (
    EvolutionConfig, free_particle_hamiltonian, classical_hamiltonian,
    equations_of_motion, evolve, cross_validate,
)
from .hilbert import dirac_product, norm

__version__ = "0.1.0"
