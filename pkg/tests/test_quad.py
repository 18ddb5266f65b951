import math
import unittest

import numpy as np

from errors import ConvergenceError, DomainError
from quad import BLOCK_SIZE, QuadResult, _pairwise_sum, default_extent, integrate, make_grid


def gaussian(betas):
    return np.exp(-np.abs(betas) ** 2) / math.pi


class MakeGridTestCase(unittest.TestCase):
    def test_weights_sum_to_area(self):
        grid = make_grid(0.5 - 1j, 3.0, 31)
        self.assertAlmostEqual(float(np.sum(grid.weights)), 36.0, places=12)
        self.assertEqual(grid.size, 31 * 31)

    def test_canonical_order(self):
        grid = make_grid(0j, 1.0, 5)
        h = grid.spacing
        self.assertAlmostEqual(grid.nodes[1] - grid.nodes[0], h)
        self.assertAlmostEqual(grid.nodes[5] - grid.nodes[0], 1j * h)
        self.assertEqual(grid.nodes[0], -1.0 - 1.0j)
        self.assertEqual(grid.nodes[-1], 1.0 + 1.0j)

    def test_boundary_ring(self):
        grid = make_grid(0j, 1.0, 5)
        self.assertEqual(int(np.sum(grid.boundary)), 16)
        self.assertFalse(grid.boundary[12])

    def test_invalid_parameters(self):
        with self.assertRaises(DomainError):
            make_grid(0j, 1.0, 4)
        with self.assertRaises(DomainError):
            make_grid(0j, 1.0, 1)
        with self.assertRaises(DomainError):
            make_grid(0j, 0.0, 5)
        with self.assertRaises(DomainError):
            make_grid(0j, float("inf"), 5)

    def test_default_extent(self):
        self.assertAlmostEqual(default_extent(0.0), 6.0)
        self.assertAlmostEqual(default_extent(0.6, 3 + 4j, 1.0), 5 + 5 + 2 + 2)


class IntegrateTestCase(unittest.TestCase):
    def test_gaussian_integral(self):
        result = integrate(gaussian, make_grid(0j, 6.0, 101))
        self.assertAlmostEqual(result.value, 1.0, places=10)
        self.assertTrue(result.converged)
        self.assertLess(result.boundary_mass, 1e-12)

    def test_refinement_reduces_error(self):
        errors = [abs(integrate(gaussian, make_grid(0j, 6.0, points)).value - 1.0) for points in (7, 13, 25)]
        self.assertGreater(errors[0], 1e-3)
        for coarse, fine in zip(errors, errors[1:]):
            self.assertLessEqual(fine, coarse / 4)

    def test_array_and_callable_agree(self):
        grid = make_grid(0.3j, 6.0, 61)
        from_callable = integrate(gaussian, grid).value
        from_array = integrate(gaussian(grid.nodes), grid).value
        self.assertAlmostEqual(from_callable, from_array, places=14)

    def test_small_grid_not_converged(self):
        result = integrate(gaussian, make_grid(0j, 1.0, 21))
        self.assertFalse(result.converged)
        self.assertGreater(result.boundary_mass, 1e-8)
        with self.assertRaises(ConvergenceError):
            result.require_converged()

    def test_matrix_valued(self):
        grid = make_grid(0j, 6.0, 41)

        def integrand(betas):
            values = gaussian(betas)
            return np.stack([values, 2 * values, 3 * values, 4 * values], axis=1).reshape(-1, 2, 2)

        result = integrate(integrand, grid)
        self.assertEqual(result.value.shape, (2, 2))
        np.testing.assert_allclose(result.value, [[1.0, 2.0], [3.0, 4.0]], atol=1e-10)

    def test_shape_mismatch(self):
        grid = make_grid(0j, 1.0, 5)
        with self.assertRaises(DomainError):
            integrate(np.ones(7), grid)

    def test_reduction_is_deterministic(self):
        grid = make_grid(0j, 5.0, 101)
        self.assertGreater(grid.size, 2 * BLOCK_SIZE)
        first = integrate(gaussian, grid)
        second = integrate(gaussian, grid)
        self.assertEqual(first.value, second.value)

    def test_pairwise_sum(self):
        values = np.arange(1.0, 101.0)
        self.assertEqual(_pairwise_sum(values), 5050.0)

    def test_result_flags(self):
        self.assertIs(QuadResult(1.0, 0.0, True).require_converged().value, 1.0)


if __name__ == "__main__":
    unittest.main()
