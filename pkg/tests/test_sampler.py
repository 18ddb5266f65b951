import math
import unittest

import numpy as np

from errors import DomainError, SamplerError
from fock_core import coherent_state, number_state
from channel import ChannelParams, average_fidelity, default_grid, measurement_probability
from sampler import (
    BetaEnvelope,
    BetaSampler,
    SamplerConfig,
    batch_generator,
    build_envelope,
    chi_square_radial,
    coherent_label,
    run_shots,
    run_shots_with_stats,
    sample_beta,
    summarize,
)


class SamplerConfigTestCase(unittest.TestCase):
    def test_seed_range(self):
        SamplerConfig(seed=2 ** 64 - 1)
        with self.assertRaises(DomainError):
            SamplerConfig(seed=-1)
        with self.assertRaises(DomainError):
            SamplerConfig(seed=2 ** 64)

    def test_batch_generator_is_reproducible(self):
        first = batch_generator(5, 3).random(4)
        second = batch_generator(5, 3).random(4)
        other = batch_generator(5, 4).random(4)
        np.testing.assert_array_equal(first, second)
        self.assertFalse(np.array_equal(first, other))


class EnvelopeTestCase(unittest.TestCase):
    def test_vacuum_envelope(self):
        params = ChannelParams(0.5, 20)
        envelope = build_envelope(number_state(0, 20), params)
        self.assertAlmostEqual(envelope.variance, 1.0 / 0.75, places=12)
        # P/g 在原点取最大值 2
        self.assertAlmostEqual(envelope.bound, 2.2, places=10)

    def test_envelope_dominates(self):
        psi = number_state(2, 30)
        params = ChannelParams(0.6, 30)
        envelope = build_envelope(psi, params)
        betas = envelope.center + np.linspace(-6, 6, 41)[:, None] + 1j * np.linspace(-6, 6, 41)[None, :]
        for beta in betas.reshape(-1)[::7]:
            self.assertLessEqual(measurement_probability(psi, beta, params), envelope.bound * envelope.density(beta))

    def test_undersized_envelope_raises(self):
        psi = number_state(0, 20)
        params = ChannelParams(0.5, 20)
        sampler = BetaSampler(psi, params, SamplerConfig(seed=1), BetaEnvelope(0j, 0.1, 0.01))
        with self.assertRaises(SamplerError):
            sampler.draw(batch_generator(1, 0), 10)


class ShotsTestCase(unittest.TestCase):
    def test_rejection_limit(self):
        psi = number_state(0, 20)
        params = ChannelParams(0.5, 20)
        with self.assertRaises(SamplerError):
            run_shots(psi, params, 1000, SamplerConfig(seed=3, max_rejections_per_draw=1))

    def test_invalid_shot_count(self):
        with self.assertRaises(DomainError):
            run_shots(number_state(0, 10), ChannelParams(0.5, 10), 0, SamplerConfig(seed=1))

    def test_deterministic_across_workers(self):
        psi = coherent_state(0.5 - 0.5j, 25).normalized()
        params = ChannelParams(0.5, 25)
        single = run_shots(psi, params, 2500, SamplerConfig(seed=11))
        threaded = run_shots(psi, params, 2500, SamplerConfig(seed=11, workers=3))
        self.assertEqual([record.to_row() for record in single], [record.to_row() for record in threaded])
        self.assertEqual([record.shot_index for record in single], list(range(2500)))

    def test_different_seeds_differ(self):
        psi = number_state(0, 15)
        params = ChannelParams(0.5, 15)
        first = run_shots(psi, params, 10, SamplerConfig(seed=1))
        second = run_shots(psi, params, 10, SamplerConfig(seed=2))
        self.assertNotEqual([r.to_row() for r in first], [r.to_row() for r in second])

    def test_store_amplitudes(self):
        psi = number_state(1, 15)
        params = ChannelParams(0.5, 15)
        records = run_shots(psi, params, 5, SamplerConfig(seed=4, store_amplitudes=True))
        for record in records:
            self.assertTrue(record.output.is_normalized())
            self.assertAlmostEqual(record.weight_at_beta, measurement_probability(psi, record.beta, params), places=14)

    def test_sample_beta(self):
        beta = sample_beta(number_state(0, 15), ChannelParams(0.3, 15), batch_generator(9, 0))
        self.assertTrue(math.isfinite(beta.re) and math.isfinite(beta.im))

    def test_vacuum_statistics(self):
        q = 0.5
        n = 100_000
        psi = number_state(0, 20)
        params = ChannelParams(q, 20)
        records, acceptance = run_shots_with_stats(psi, params, n, SamplerConfig(seed=20010101))
        betas = np.array([record.beta.value for record in records])

        expected = 0.5 / (1 - q * q)
        tolerance = 4 * expected * math.sqrt(2.0 / (n - 1))
        self.assertAlmostEqual(float(np.var(betas.real, ddof=1)), expected, delta=tolerance)
        self.assertAlmostEqual(float(np.var(betas.imag, ddof=1)), expected, delta=tolerance)

        _, p_value = chi_square_radial(betas, psi, params)
        self.assertGreater(p_value, 0.001)

        stats = summarize(records, acceptance)
        reference = average_fidelity(psi, params, default_grid(psi, params))
        self.assertAlmostEqual(stats.mean_fidelity, reference, delta=4 * stats.stderr)
        self.assertAlmostEqual(reference, 0.75, delta=1e-6)
        self.assertGreater(stats.acceptance_rate, 0.3)
        self.assertLess(stats.acceptance_rate, 0.6)


class HelpersTestCase(unittest.TestCase):
    def test_coherent_label(self):
        self.assertAlmostEqual(coherent_label(coherent_state(1 - 1j, 30).normalized()), 1 - 1j, places=8)
        self.assertEqual(coherent_label(number_state(0, 10)), 0j)
        self.assertIsNone(coherent_label(number_state(1, 10)))

    def test_chi_square_requires_coherent_input(self):
        with self.assertRaises(DomainError):
            chi_square_radial(np.zeros(10, dtype=complex), number_state(1, 10), ChannelParams(0.5, 10))

    def test_summarize_empty(self):
        with self.assertRaises(DomainError):
            summarize([])


if __name__ == "__main__":
    unittest.main()
