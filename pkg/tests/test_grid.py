"""
Unit tests for the configuration-space grid: geometry, quadrature and
derivative operators.
"""

import sys
import os
import unittest

import numpy as np

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from probability_geometry.errors import FieldError, GridError
from probability_geometry.fields import ScalarField
from probability_geometry.grid import (
    GridSpec, fourier_shift_array, gradient, gradient_array, integrate, integrate_array, laplacian_array,
    laplacian_matrix, laplacian_spectral_radius, second_derivative_array, translate, wavenumber_squared,
)


class TestGridSpec(unittest.TestCase):

    def test_broadcasts_scalars_over_axes(self):
        grid = GridSpec(dim=2, extents=10.0, points=64)
        self.assertEqual(grid.extents, (10.0, 10.0))
        self.assertEqual(grid.points, (64, 64))
        self.assertEqual(grid.shape, (64, 64))
        self.assertEqual(grid.size, 64 * 64)

    def test_default_lower_centers_box(self):
        grid = GridSpec(dim=1, extents=10.0, points=100)
        self.assertAlmostEqual(grid.lower[0], -5.0)
        self.assertAlmostEqual(grid.spacing[0], 0.1)
        self.assertAlmostEqual(grid.center()[0], 0.0)
        self.assertAlmostEqual(grid.axis_coordinates(0)[0], -5.0)

    def test_invalid_dimension(self):
        with self.assertRaises(GridError):
            GridSpec(dim=0, extents=1.0, points=16)
        with self.assertRaises(GridError):
            GridSpec(dim=4, extents=1.0, points=16)

    def test_too_few_points(self):
        with self.assertRaises(GridError):
            GridSpec(dim=1, extents=1.0, points=4)

    def test_non_positive_extent(self):
        with self.assertRaises(GridError):
            GridSpec(dim=1, extents=0.0, points=16)

    def test_spectral_needs_periodic(self):
        with self.assertRaises(GridError):
            GridSpec(dim=1, extents=1.0, points=16, boundary="vanishing", scheme="spectral")

    def test_unknown_stencil_order(self):
        with self.assertRaises(GridError):
            GridSpec(dim=1, extents=1.0, points=16, stencil_order=3)

    def test_axis_out_of_range(self):
        grid = GridSpec(dim=1, extents=1.0, points=16)
        with self.assertRaises(GridError):
            grid.check_axis(1)
        with self.assertRaises(GridError):
            gradient_array(grid, np.zeros(16), 2)

    def test_mismatched_grids(self):
        a = GridSpec(dim=1, extents=1.0, points=16)
        b = GridSpec(dim=1, extents=1.0, points=32)
        with self.assertRaises(GridError):
            a.check_same(b)


class TestQuadrature(unittest.TestCase):

    def test_normalized_gaussian_integrates_to_one(self):
        grid = GridSpec(dim=1, extents=20.0, points=256)
        f = ScalarField.from_function(grid, lambda x: np.exp(-x ** 2 / 2.0) / np.sqrt(2.0 * np.pi))
        self.assertAlmostEqual(integrate(f), 1.0, delta=1e-10)

    def test_constant_integrates_to_volume(self):
        grid = GridSpec(dim=3, extents=(1.0, 2.0, 3.0), points=8)
        self.assertAlmostEqual(integrate(ScalarField.constant(grid, 1.0)), 6.0, places=12)

    def test_rejects_non_finite(self):
        grid = GridSpec(dim=1, extents=1.0, points=16)
        values = np.zeros(16)
        values[3] = np.nan
        with self.assertRaises(FieldError):
            integrate_array(grid, values)


class TestDerivatives(unittest.TestCase):

    def _sine(self, grid):
        k = 2.0 * np.pi / grid.extents[0]
        f = ScalarField.from_function(grid, lambda x: np.sin(k * x))
        return k, f

    def test_spectral_derivative_of_sine(self):
        grid = GridSpec(dim=1, extents=10.0, points=64, scheme="spectral")
        k, f = self._sine(grid)
        x = grid.coordinate(0)
        error = np.max(np.abs(gradient(f, 0).values - k * np.cos(k * x)))
        self.assertLess(error, 1e-10, f"spectral derivative error {error:.3e}")

    def test_spectral_second_derivative_of_sine(self):
        grid = GridSpec(dim=1, extents=10.0, points=64, scheme="spectral")
        k, f = self._sine(grid)
        error = np.max(np.abs(second_derivative_array(grid, f.values, 0) + k ** 2 * f.values))
        self.assertLess(error, 1e-10)

    def test_higher_order_stencil_is_more_accurate(self):
        errors = {}
        for order in (2, 8):
            grid = GridSpec(dim=1, extents=10.0, points=64, stencil_order=order)
            k, f = self._sine(grid)
            x = grid.coordinate(0)
            errors[order] = np.max(np.abs(gradient(f, 0).values - k * np.cos(k * x)))
        self.assertLess(errors[2], 1e-2)
        self.assertLess(errors[8], 1e-3 * errors[2], f"order 8 error {errors[8]:.3e} vs order 2 {errors[2]:.3e}")

    def test_vanishing_gradient_of_linear_function_is_exact(self):
        for order in (2, 4, 6, 8):
            grid = GridSpec(dim=1, extents=8.0, points=32, boundary="vanishing", stencil_order=order)
            x = grid.coordinate(0)
            slope = gradient_array(grid, 3.0 * x + 1.0, 0)
            self.assertTrue(np.allclose(slope, 3.0, atol=1e-12), f"order {order} not exact on a line")

    def test_summation_by_parts_on_periodic_grid(self):
        rng = np.random.default_rng(0)
        for order in (2, 4, 6, 8):
            grid = GridSpec(dim=1, extents=5.0, points=64, stencil_order=order)
            f = rng.normal(size=grid.shape)
            g = rng.normal(size=grid.shape)
            lhs = np.sum(g * gradient_array(grid, f, 0))
            rhs = -np.sum(f * gradient_array(grid, g, 0))
            self.assertAlmostEqual(lhs, rhs, delta=1e-10, msg=f"order {order}")

    def test_laplacian_sums_axes(self):
        grid = GridSpec(dim=2, extents=(6.0, 8.0), points=(48, 64), scheme="spectral")
        x, y = grid.mesh()
        kx, ky = 2.0 * np.pi / 6.0, 2.0 * np.pi / 8.0
        values = np.sin(kx * x) * np.cos(ky * y)
        error = np.max(np.abs(laplacian_array(grid, values) + (kx ** 2 + ky ** 2) * values))
        self.assertLess(error, 1e-9)

    def test_wavenumber_squared_shape(self):
        grid = GridSpec(dim=2, extents=1.0, points=(16, 32), scheme="spectral")
        k2 = wavenumber_squared(grid)
        self.assertEqual(k2.shape, (16, 32))
        self.assertEqual(k2[0, 0], 0.0)


class TestSparseLaplacian(unittest.TestCase):

    def _compare(self, grid):
        rng = np.random.default_rng(1)
        values = rng.normal(size=grid.shape)
        dense = laplacian_array(grid, values)
        sparse_result = (laplacian_matrix(grid) @ values.ravel()).reshape(grid.shape)
        scale = np.max(np.abs(dense))
        self.assertLess(np.max(np.abs(dense - sparse_result)), 1e-12 * scale, grid.describe())

    def test_matches_array_operator_periodic(self):
        self._compare(GridSpec(dim=1, extents=3.0, points=32, stencil_order=8))

    def test_matches_array_operator_vanishing_2d(self):
        self._compare(GridSpec(dim=2, extents=(3.0, 4.0), points=(16, 24), boundary="vanishing", stencil_order=4))

    def test_spectral_grid_rejected(self):
        grid = GridSpec(dim=1, extents=1.0, points=16, scheme="spectral")
        with self.assertRaises(GridError):
            laplacian_matrix(grid)

    def test_spectral_radius_is_checkerboard_eigenvalue(self):
        for grid in (
            GridSpec(dim=1, extents=3.0, points=32, stencil_order=2),
            GridSpec(dim=1, extents=3.0, points=32, stencil_order=8),
            GridSpec(dim=1, extents=3.0, points=32, scheme="spectral"),
        ):
            checker = (-1.0) ** np.arange(32)
            radius = laplacian_spectral_radius(grid)
            self.assertTrue(
                np.allclose(laplacian_array(grid, checker), -radius * checker, rtol=1e-12, atol=0.0),
                grid.describe(),
            )

    def test_order_two_radius(self):
        grid = GridSpec(dim=2, extents=(2.0, 4.0), points=(16, 16))
        self.assertAlmostEqual(laplacian_spectral_radius(grid), 4.0 / 0.125 ** 2 + 4.0 / 0.25 ** 2)


class TestTranslate(unittest.TestCase):

    def test_shift_by_grid_steps(self):
        grid = GridSpec(dim=1, extents=1.0, points=16)
        f = ScalarField(grid, np.arange(16, dtype=float))
        g = translate(f, 3)
        self.assertEqual(g.values[0], 3.0)
        self.assertEqual(g.values[15], 2.0)

    def test_preserves_integral(self):
        grid = GridSpec(dim=2, extents=2.0, points=16)
        rng = np.random.default_rng(2)
        f = ScalarField(grid, rng.random(grid.shape))
        self.assertAlmostEqual(integrate(translate(f, (2, -5))), integrate(f), places=12)

    def test_fourier_shift_matches_whole_cell_translation(self):
        grid = GridSpec(dim=1, extents=1.0, points=16)
        f = ScalarField(grid, np.arange(16, dtype=float))
        moved = fourier_shift_array(grid, f.values, -3 * grid.spacing[0])
        self.assertTrue(np.allclose(moved, translate(f, 3).values, rtol=0.0, atol=1e-12))

    def test_fourier_shift_by_fraction_of_a_cell(self):
        grid = GridSpec(dim=2, extents=4.0, points=32, scheme="spectral")
        x, y = grid.mesh()
        values = np.exp(1j * np.pi * x / 2.0) * np.cos(np.pi * y)
        moved = fourier_shift_array(grid, values, (0.37, -0.05))
        expected = np.exp(1j * np.pi * (x - 0.37) / 2.0) * np.cos(np.pi * (y + 0.05))
        self.assertTrue(np.allclose(moved, expected, rtol=0.0, atol=1e-12))

    def test_fourier_shift_needs_periodic_grid(self):
        grid = GridSpec(dim=1, extents=1.0, points=16, boundary="vanishing")
        with self.assertRaises(GridError):
            fourier_shift_array(grid, np.zeros(16), 0.1)

    def test_vanishing_grid_rejected(self):
        grid = GridSpec(dim=1, extents=1.0, points=16, boundary="vanishing")
        with self.assertRaises(GridError):
            translate(ScalarField.constant(grid, 1.0), 1)


if __name__ == "__main__":
    unittest.main()
