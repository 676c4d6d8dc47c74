"""
Dirac product induced by the flat Kahler structure.

With u = (psi, psi*) the blocks g_c + i Omega_c reduce to [[0, 0], [2 alpha, 0]],
so (1/2 alpha) int u_phi^T (g_c + i Omega_c) u_psi is int phi* psi. The
product is conjugate-linear in its first argument.
"""

import logging
import math

import numpy as np

from .errors import ConsistencyError
from .grid import integrate_array
from .kahler import flat_blocks

logger = logging.getLogger("probability_geometry.hilbert")

ROUTE_TOLERANCE = 1e-12


def inner_product_direct(phi, psi):
    """int conj(phi) psi."""
    phi.grid.check_same(psi.grid)
    return complex(integrate_array(phi.grid, np.conj(phi.values) * psi.values))


def kahler_contraction(phi, psi, alpha):
    """(1/2 alpha) int (phi, phi*) [g_c + i Omega_c] (psi, psi*)^T."""
    phi.grid.check_same(psi.grid)
    omega_c, g_c, _ = flat_blocks(alpha)
    hermitian = g_c + 1j * omega_c
    u_phi = np.stack([phi.values, np.conj(phi.values)], axis=-1)
    u_psi = np.stack([psi.values, np.conj(psi.values)], axis=-1)
    density = np.einsum("...a,ab,...b->...", u_phi, hermitian, u_psi)
    return complex(integrate_array(phi.grid, density)) / (2.0 * alpha)


def dirac_product(phi, psi, alpha):
    """<phi|psi> via the Kahler contraction, cross-checked against int phi* psi."""
    via_kahler = kahler_contraction(phi, psi, alpha)
    direct = inner_product_direct(phi, psi)
    scale = math.sqrt(
        abs(inner_product_direct(phi, phi)) * abs(inner_product_direct(psi, psi))
    )
    gap = abs(via_kahler - direct)
    if gap > ROUTE_TOLERANCE * max(scale, 1e-300):
        raise ConsistencyError(
            f"Dirac product routes disagree: Kahler {via_kahler:.15g}, direct {direct:.15g}"
        )
    return via_kahler


def norm(psi, alpha):
    """sqrt(<psi|psi>)."""
    value = dirac_product(psi, psi, alpha)
    if abs(value.imag) > ROUTE_TOLERANCE * max(abs(value.real), 1e-300):
        raise ConsistencyError(f"<psi|psi> has imaginary part {value.imag:.3e}")
    return math.sqrt(max(value.real, 0.0))
