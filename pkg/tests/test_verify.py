import math
import unittest

import numpy as np

from errors import DomainError
from fock_core import coherent_state, interior_max_index, number_state
from channel import ChannelParams, default_grid, measurement_probabilities, output_density_matrix, transfer_operator
from quad import make_grid
from sampler import SamplerConfig
from verify import (
    BasisKind,
    basis_completeness_deviation,
    default_alpha_grid,
    default_homodyne_nodes,
    effective_measurement_state,
    eight_port_distribution,
    homodyne_distribution,
    homodyne_distribution_from_density,
    homodyne_nodes,
    joint_distribution,
    make_basis,
    q_function_moments,
    quadrature_amplitudes,
    quadrature_statistics,
    reconstruct_gamma,
    sample_joint,
    verification_probability,
)


class HomodyneTestCase(unittest.TestCase):
    def test_quadrature_amplitudes_orthonormal(self):
        x = np.linspace(-10, 10, 2001)
        amplitudes = quadrature_amplitudes(x, 10)
        h = x[1] - x[0]
        gram = amplitudes.T @ amplitudes * h
        np.testing.assert_allclose(gram, np.eye(11), atol=1e-10)

    def test_vacuum_density(self):
        x = homodyne_nodes(0.0, 6.0, 601)
        distribution = homodyne_distribution(number_state(0, 10), x)
        np.testing.assert_allclose(distribution.values, math.sqrt(2 / math.pi) * np.exp(-2 * x * x), atol=1e-14)
        self.assertAlmostEqual(distribution.mass, 1.0, places=10)
        self.assertAlmostEqual(distribution.variance(), 0.25, places=10)
        self.assertTrue(distribution.converged)

    def test_coherent_means(self):
        psi = coherent_state(0.6 + 1.0j, 40).normalized()
        nodes = default_homodyne_nodes(0.0, 0.5, 40)
        self.assertAlmostEqual(homodyne_distribution(psi, nodes, BasisKind.HOMODYNE_X).mean().real, 0.6, places=8)
        self.assertAlmostEqual(homodyne_distribution(psi, nodes, BasisKind.HOMODYNE_Y).mean().real, 1.0, places=8)

    def test_quadrature_statistics(self):
        psi = coherent_state(0.6 + 1.0j, 40).normalized()
        mean, std = quadrature_statistics(psi, BasisKind.HOMODYNE_Y)
        self.assertAlmostEqual(mean, 1.0, places=10)
        self.assertAlmostEqual(std, 0.5, places=8)

    def test_teleported_coherent_variance(self):
        psi = coherent_state(0.5, 40).normalized()
        for q in (0.0, 0.5):
            params = ChannelParams(q, 40)
            rho = output_density_matrix(psi, params, default_grid(psi, params))
            expected = 0.25 + (1 - q) / (2 * (1 + q))
            _, std = quadrature_statistics(rho, BasisKind.HOMODYNE_X)
            self.assertAlmostEqual(std * std, expected, delta=1e-3)
            nodes = default_homodyne_nodes(0.5, math.sqrt(expected), 40)
            distribution = homodyne_distribution_from_density(rho, nodes)
            self.assertAlmostEqual(distribution.variance(), expected, delta=1e-3)


class BasisTestCase(unittest.TestCase):
    def test_homodyne_completeness(self):
        for kind in (BasisKind.HOMODYNE_X, BasisKind.HOMODYNE_Y):
            basis = make_basis(kind, 30)
            self.assertLess(basis_completeness_deviation(basis), 1e-4)

    def test_number_completeness(self):
        self.assertEqual(basis_completeness_deviation(make_basis(BasisKind.NUMBER, 12)), 0.0)

    def test_eight_port_completeness(self):
        psi = coherent_state(0.5, 20).normalized()
        grid = default_alpha_grid(psi, ChannelParams(0.5, 20), 81)
        basis = make_basis(BasisKind.EIGHT_PORT, 20, alpha_grid=grid)
        self.assertLess(basis_completeness_deviation(basis), 1e-4)

    def test_eight_port_requires_grid(self):
        with self.assertRaises(DomainError):
            make_basis(BasisKind.EIGHT_PORT, 10)

    def test_eight_port_distribution(self):
        alpha = 0.3 - 0.4j
        psi = coherent_state(alpha, 30).normalized()
        grid = make_grid(alpha, 7.0, 81)
        distribution = eight_port_distribution(psi, grid)
        expected = np.exp(-np.abs(grid.nodes - alpha) ** 2) / math.pi
        np.testing.assert_allclose(distribution.values, expected, atol=1e-12)
        self.assertAlmostEqual(distribution.mass, 1.0, places=10)


class JointDistributionTestCase(unittest.TestCase):
    def test_marginals(self):
        psi = coherent_state(0.5, 20).normalized()
        params = ChannelParams(0.5, 20)
        beta_grid = default_grid(psi, params, points_per_axis=41)
        basis = make_basis(BasisKind.HOMODYNE_X, 20)
        joint = joint_distribution(psi, params, basis, beta_grid)
        self.assertAlmostEqual(joint.total_mass, 1.0, delta=1e-5)

        rho = output_density_matrix(psi, params, beta_grid)
        from_density = homodyne_distribution_from_density(rho, basis.nodes)
        np.testing.assert_allclose(joint.verification_marginal, from_density.values, atol=1e-10)

    def test_beta_marginal_matches_probability(self):
        psi = coherent_state(0.5, 40).normalized()
        params = ChannelParams(0.5, 40)
        beta_grid = default_grid(psi, params, points_per_axis=41)
        joint = joint_distribution(psi, params, make_basis(BasisKind.HOMODYNE_X, 40), beta_grid)
        expected = measurement_probabilities(psi, beta_grid.nodes, params)
        np.testing.assert_allclose(joint.beta_marginal, expected, rtol=0, atol=1e-8)

    def test_verification_probability(self):
        psi = number_state(1, 20)
        params = ChannelParams(0.5, 20)
        beta_grid = default_grid(psi, params, points_per_axis=41)
        basis = make_basis(BasisKind.HOMODYNE_Y, 20)
        probabilities = verification_probability(psi, params, basis, beta_grid)
        rho = output_density_matrix(psi, params, beta_grid)
        expected = homodyne_distribution_from_density(rho, basis.nodes, BasisKind.HOMODYNE_Y).values
        np.testing.assert_allclose(probabilities, expected, atol=1e-10)
        self.assertAlmostEqual(float(np.sum(probabilities * basis.weights)), 1.0, delta=1e-5)

    def test_unentangled_outcomes_concentrate_at_beta(self):
        # q=0 时 T(β) ∝ |β⟩⟨β|，给定 β 的 α 服从以 β 为中心、E|α-β|²=1 的高斯分布
        psi = coherent_state(0.5, 20).normalized()
        params = ChannelParams(0.0, 20)
        beta_grid = make_grid(0.5, 6.0, 25)
        basis = make_basis(BasisKind.EIGHT_PORT, 20, alpha_grid=default_alpha_grid(psi, params, 81))
        joint = joint_distribution(psi, params, basis, beta_grid)

        conditional = joint.values * basis.weights
        near = np.abs(beta_grid.nodes - 0.5) <= 1.5
        self.assertGreater(int(np.sum(near)), 20)
        for beta, row, marginal in zip(beta_grid.nodes[near], conditional[near], joint.beta_marginal[near]):
            mean = np.sum(row * basis.nodes) / marginal
            spread = np.sum(row * np.abs(basis.nodes - beta) ** 2) / marginal
            self.assertAlmostEqual(complex(mean), complex(beta), delta=1e-6)
            self.assertAlmostEqual(float(spread), 1.0, delta=1e-4)

    def test_cutoff_mismatch(self):
        with self.assertRaises(DomainError):
            joint_distribution(
                number_state(0, 10), ChannelParams(0.5, 10), make_basis(BasisKind.NUMBER, 12), make_grid(0j, 6.0, 21)
            )


class EffectiveBasisTestCase(unittest.TestCase):
    def test_effective_state_matches_transfer(self):
        cutoff = 40
        for q in (0.3, 0.7):
            params = ChannelParams(q, cutoff)
            for beta in (0.0, 0.5, -0.4 + 0.5j):
                block = interior_max_index(abs(beta), cutoff) + 1
                for alpha in (0.0, 1.0, -0.5 + 0.5j):
                    direct = transfer_operator(beta, params).apply(coherent_state(alpha, cutoff)).amplitudes
                    prefactor, gamma, state = effective_measurement_state(beta, alpha, params)
                    expected = math.sqrt(math.pi) * prefactor * state.amplitudes
                    np.testing.assert_allclose(direct[:block], expected[:block], rtol=0, atol=1e-9)
                    self.assertAlmostEqual(complex(gamma), beta + q * (alpha - beta))

    def test_reconstruct_gamma(self):
        gamma = reconstruct_gamma(1.0, 3.0 + 1j, ChannelParams(0.25, 10))
        self.assertAlmostEqual(gamma.re, 1.5)
        self.assertAlmostEqual(gamma.im, 0.25)


class JointSamplingTestCase(unittest.TestCase):
    def test_q_function_moments(self):
        mean, covariance = q_function_moments(coherent_state(0.5 - 0.2j, 30).normalized())
        self.assertAlmostEqual(mean, 0.5 - 0.2j, places=10)
        np.testing.assert_allclose(covariance, 0.5 * np.eye(2), atol=1e-10)

    def test_gamma_reproduces_q_function(self):
        psi = coherent_state(0.5, 20).normalized()
        params = ChannelParams(0.5, 20)
        n = 2000
        sample = sample_joint(psi, params, n, SamplerConfig(seed=7))
        self.assertEqual(sample.gammas.shape, (n,))
        np.testing.assert_allclose(sample.gammas, sample.betas + 0.5 * (sample.alphas - sample.betas))

        mean, covariance = q_function_moments(psi)
        stderr = math.sqrt(0.5 / n)
        self.assertAlmostEqual(float(np.mean(sample.gammas.real)), mean.real, delta=5 * stderr)
        self.assertAlmostEqual(float(np.mean(sample.gammas.imag)), mean.imag, delta=5 * stderr)
        variance_tolerance = 5 * 0.5 * math.sqrt(2.0 / (n - 1))
        self.assertAlmostEqual(float(np.var(sample.gammas.real, ddof=1)), covariance[0, 0], delta=variance_tolerance)
        self.assertAlmostEqual(float(np.var(sample.gammas.imag, ddof=1)), covariance[1, 1], delta=variance_tolerance)

    def test_sampling_is_reproducible(self):
        psi = number_state(1, 15)
        params = ChannelParams(0.5, 15)
        first = sample_joint(psi, params, 50, SamplerConfig(seed=3))
        second = sample_joint(psi, params, 50, SamplerConfig(seed=3))
        np.testing.assert_array_equal(first.gammas, second.gammas)


if __name__ == "__main__":
    unittest.main()
