"""
Unit tests for the Dirac product induced by the flat Kahler structure.
"""

import sys
import os
import unittest
from unittest.mock import patch

import numpy as np

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from probability_geometry.dynamics import EvolutionConfig, SchrodingerPropagator
from probability_geometry.errors import ConsistencyError
from probability_geometry.fields import ComplexField
from probability_geometry.grid import GridSpec
from probability_geometry.hilbert import dirac_product, inner_product_direct, kahler_contraction, norm
from probability_geometry.states import random_complex_field, random_wavefunction


class TestDiracProduct(unittest.TestCase):

    def setUp(self):
        self.grid = GridSpec(dim=1, extents=10.0, points=128, scheme="spectral")
        self.rng = np.random.default_rng(0)

    def test_routes_agree(self):
        for alpha in (0.5, 1.0, 3.0):
            phi = random_complex_field(self.grid, self.rng)
            psi = random_complex_field(self.grid, self.rng)
            via_kahler = kahler_contraction(phi, psi, alpha)
            direct = inner_product_direct(phi, psi)
            self.assertLess(abs(via_kahler - direct), 1e-12 * abs(direct) + 1e-13, f"alpha={alpha}")
            self.assertEqual(dirac_product(phi, psi, alpha), via_kahler)

    def test_conjugate_linear_in_first_argument(self):
        phi = random_complex_field(self.grid, self.rng)
        psi = random_complex_field(self.grid, self.rng)
        a = 0.3 - 1.7j
        base = dirac_product(phi, psi, 1.0)
        self.assertAlmostEqual(dirac_product(phi.scaled(a), psi, 1.0), np.conj(a) * base, delta=1e-11)
        self.assertAlmostEqual(dirac_product(phi, psi.scaled(a), 1.0), a * base, delta=1e-11)

    def test_hermitian_symmetry(self):
        phi = random_complex_field(self.grid, self.rng)
        psi = random_complex_field(self.grid, self.rng)
        self.assertAlmostEqual(dirac_product(phi, psi, 1.0), np.conj(dirac_product(psi, phi, 1.0)), delta=1e-12)

    def test_positive_and_normalized(self):
        psi = random_wavefunction(self.grid, 1.0, self.rng)
        self.assertAlmostEqual(norm(psi, 1.0), 1.0, delta=1e-9)
        self.assertEqual(norm(ComplexField(self.grid, np.zeros(128)), 1.0), 0.0)

    def test_route_disagreement_raises(self):
        phi = random_complex_field(self.grid, self.rng)
        with patch("probability_geometry.hilbert.kahler_contraction", return_value=complex(1e6, 0.0)):
            with self.assertRaises(ConsistencyError):
                dirac_product(phi, phi, 1.0)

    def test_invariant_under_evolution(self):
        alpha = 1.0
        config = EvolutionConfig(integrator="crank_nicolson_psi", dt=0.01, alpha=alpha)
        propagator = SchrodingerPropagator(self.grid, config.dt, alpha, config.mass)
        phi = random_wavefunction(self.grid, alpha, self.rng)
        psi = random_wavefunction(self.grid, alpha, self.rng)
        start = dirac_product(phi, psi, alpha)
        a, b = phi.values, psi.values
        for _ in range(100):
            a, b = propagator.step(a), propagator.step(b)
        end = dirac_product(ComplexField(self.grid, a), ComplexField(self.grid, b), alpha)
        self.assertLess(abs(end - start), 1e-8)


if __name__ == "__main__":
    unittest.main()
