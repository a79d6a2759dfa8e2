"""
Tests for the triple parametric decomposition
"""

import math
import unittest

import numpy as np
import pytest

from models import ArrayGeometry, ModelFlag, Scatterer
from services.channel import synthesize_snapshots
from services.geometry import index_grid, region_boundaries
from services.recovery import step3_atoms
from services.tpd import (
    decompose, estimate_noise_floor, step1_angular_product, step2_companions, step2_decompose,
)
from utils import SequenceError


def ideal_snapshot(geom, scatterer, model=ModelFlag.FRESNEL):
    return synthesize_snapshots(geom, [scatterer], 1, math.inf, model, gains=np.array([[1.0]]))


class AngularProductTestCase(unittest.TestCase):
    def setUp(self):
        self.geom = ArrayGeometry(n_h=8, n_v=6, wavelength=0.01)
        self.idx = index_grid(self.geom)

    def test_distance_terms_cancel(self):
        rng = np.random.default_rng(0)
        kd2 = 2 * self.geom.wavenumber * self.geom.spacing
        for _ in range(100):
            radius, phi = math.sqrt(rng.uniform(0, 0.9)), rng.uniform(0, 2 * math.pi)
            s = Scatterer(u=radius * math.cos(phi), v=radius * math.sin(phi), r=rng.uniform(0.05, 5.0))
            x = step1_angular_product(ideal_snapshot(self.geom, s), self.geom)
            expected = np.exp(1j * kd2 * (self.idx[:, 0] * s.u + self.idx[:, 1] * s.v))
            np.testing.assert_allclose(x.ravel(), expected, atol=1e-10)

    def test_hermitian_symmetry(self):
        scene = [Scatterer(u=0.2, v=0.1, r=0.3), Scatterer(u=-0.5, v=0.3, r=1.2, power=0.5)]
        obs = synthesize_snapshots(ArrayGeometry(n_h=7, n_v=5, wavelength=0.01), scene, 20, 5.0, rng_seed=4)
        x = step1_angular_product(obs, obs.geometry, obs.noise_variance)
        np.testing.assert_allclose(x[::-1, ::-1], np.conj(x), atol=1e-12)

    def test_center_entry_noise_correction(self):
        geom = ArrayGeometry(n_h=5, n_v=5, wavelength=0.01)
        obs = synthesize_snapshots(geom, [Scatterer(u=0.1, v=0.1, r=1.0)], 10, 0.0, rng_seed=2)
        raw = step1_angular_product(obs, geom)
        corrected = step1_angular_product(obs, geom, 0.25)
        self.assertAlmostEqual(raw[2, 2] - corrected[2, 2], 0.25)
        corrected[2, 2] = raw[2, 2]
        np.testing.assert_array_equal(raw, corrected)


class MirroredSumTestCase(unittest.TestCase):
    def setUp(self):
        self.geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        self.s = Scatterer(u=0.3, v=-0.2, r=0.4)
        self.x = step1_angular_product(ideal_snapshot(self.geom, self.s), self.geom)

    def test_sums_are_mirror_symmetric(self):
        s, t = step2_decompose(self.x)
        np.testing.assert_allclose(s, s[:, ::-1])
        np.testing.assert_allclose(t, t[::-1, :])
        s_minus, t_minus = step2_companions(self.x)
        np.testing.assert_allclose(s + s_minus, 2 * self.x)
        np.testing.assert_allclose(t + t_minus, 2 * self.x)

    def test_elevation_sum_carries_v_only(self):
        s, _ = step2_decompose(self.x)
        kd2 = 2 * self.geom.wavenumber * self.geom.spacing
        m = index_grid(self.geom)[:, 0].reshape(8, 8)
        n = index_grid(self.geom)[:, 1].reshape(8, 8)
        expected = np.exp(1j * kd2 * n * self.s.v) * 2 * np.cos(kd2 * m * self.s.u)
        np.testing.assert_allclose(s, expected, atol=1e-10)


class CenterProductTestCase(unittest.TestCase):
    def test_matches_distance_atoms(self):
        geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        s = Scatterer(u=-0.1, v=0.35, r=0.2)
        seq = decompose(ideal_snapshot(geom, s), geom, noise_floor="none")
        self.assertEqual(seq.reference, (4, 4))
        atom = step3_atoms(geom, s.u, s.v, np.array([1 / s.r]), seq.reference)[:, 0]
        np.testing.assert_allclose(seq.step3.ravel(), atom * math.sqrt(64), atol=1e-10)

    def test_models_agree_far_away(self):
        geom = ArrayGeometry(n_h=16, n_v=16, wavelength=0.01)
        s = Scatterer(u=0.2, v=0.3, r=100 * region_boundaries(geom).rayleigh_distance)
        exact = decompose(ideal_snapshot(geom, s, ModelFlag.EXACT), geom, noise_floor="none")
        fresnel = decompose(ideal_snapshot(geom, s, ModelFlag.FRESNEL), geom, noise_floor="none")
        np.testing.assert_allclose(exact.step1, fresnel.step1, atol=1e-5)
        np.testing.assert_allclose(exact.step3, fresnel.step3, atol=1e-5)


class NoiseFloorTestCase(unittest.TestCase):
    def test_eigenvalue_estimate(self):
        geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        scene = [Scatterer(u=0.2, v=0.0, r=0.5, power=0.5), Scatterer(u=-0.4, v=0.3, r=1.0, power=0.5)]
        obs = synthesize_snapshots(geom, scene, 1000, 10.0, rng_seed=12)
        self.assertAlmostEqual(estimate_noise_floor(obs, 2), 0.1, delta=0.015)

    def test_data_mode_is_recorded(self):
        geom = ArrayGeometry(n_h=4, n_v=4, wavelength=0.01)
        obs = synthesize_snapshots(geom, [Scatterer(u=0.0, v=0.0, r=1.0)], 200, 10.0, rng_seed=1)
        self.assertEqual(decompose(obs, geom, "oracle").noise_floor, obs.noise_variance)
        self.assertEqual(decompose(obs, geom, "none").noise_floor, 0.0)
        self.assertGreater(decompose(obs, geom, "data", 1).noise_floor, 0.0)

    def test_missing_snapshots_raise(self):
        geom = ArrayGeometry(n_h=4, n_v=4, wavelength=0.01)
        with self.assertRaises(SequenceError):
            decompose(None, geom)


@pytest.mark.slow
class CrossTermDecayTestCase(unittest.TestCase):
    def test_deviation_halves_with_four_times_snapshots(self):
        geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        scene = [Scatterer(u=0.2, v=-0.1, r=0.3, power=0.5), Scatterer(u=-0.35, v=0.25, r=0.8, power=0.5)]
        idx = index_grid(geom)
        kd2 = 2 * geom.wavenumber * geom.spacing
        expected = sum(s.power * np.exp(1j * kd2 * (idx[:, 0] * s.u + idx[:, 1] * s.v)) for s in scene)
        expected = expected.reshape(8, 8)

        deviation = {}
        for T in (25, 100, 400):
            errors = []
            for seed in range(50):
                obs = synthesize_snapshots(geom, scene, T, math.inf, ModelFlag.FRESNEL, rng_seed=seed)
                errors.append(np.linalg.norm(step1_angular_product(obs, geom) - expected))
            deviation[T] = float(np.mean(errors))
        for short, long in ((25, 100), (100, 400)):
            ratio = deviation[short] / deviation[long]
            self.assertTrue(1.6 <= ratio <= 2.4, (short, long, ratio))


if __name__ == '__main__':
    unittest.main()
