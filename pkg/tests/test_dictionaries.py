"""
Tests for the sparsifying dictionary service
"""

import unittest
from unittest import mock

import numpy as np

from config import config
from models import ArrayGeometry, Dictionary, DictionaryFlavor, Scatterer
from services.channel import steering_exact, steering_planar
from services.dictionaries import (
    adjacent_distance_coherence, angle_grid, atoms_for_energy, build_ad_dictionary, build_pd_dictionary,
    captured_energy, check_dictionary_memory, default_oversampling, mutual_coherence, pd_level_count,
)
from services.geometry import region_boundaries
from utils import DictionaryError


def manual_dictionary(atoms: np.ndarray) -> Dictionary:
    size = atoms.shape[1]
    grid = np.column_stack([np.zeros(size), np.zeros(size), np.full(size, np.inf)])
    return Dictionary(atoms=atoms, grid=grid, flavor=DictionaryFlavor.AD, angle_shape=(1, size))


class AngleGridTestCase(unittest.TestCase):
    def test_grid_points(self):
        np.testing.assert_allclose(angle_grid(4), [-0.75, -0.25, 0.25, 0.75])
        self.assertEqual(angle_grid(8, 2).size, 16)
        np.testing.assert_array_equal(angle_grid(1, 3), [0.0])

    def test_bad_oversampling(self):
        with self.assertRaises(DictionaryError):
            angle_grid(8, 0)

    def test_default_oversampling(self):
        self.assertEqual(default_oversampling(ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)), (1, 1))
        self.assertEqual(default_oversampling(ArrayGeometry(n_h=64, n_v=1, wavelength=0.01)), (2, 1))
        self.assertEqual(default_oversampling(ArrayGeometry(n_h=1, n_v=64, wavelength=0.01)), (1, 2))


class AngularDictionaryTestCase(unittest.TestCase):
    def setUp(self):
        self.geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        self.ad = build_ad_dictionary(self.geom)

    def test_orthonormal_at_critical_sampling(self):
        self.assertEqual(self.ad.size, 64)
        gram = self.ad.atoms.conj().T @ self.ad.atoms
        np.testing.assert_allclose(gram, np.eye(64), atol=1e-10)
        self.assertLess(mutual_coherence(self.ad), 1e-10)

    def test_grid_is_planar(self):
        self.assertTrue(np.all(np.isinf(self.ad.grid[:, 2])))
        self.assertEqual(self.ad.angle_shape, (8, 8))

    def test_duplicate_atom_has_unit_coherence(self):
        atoms = self.ad.atoms[:, [0, 0, 5]]
        self.assertAlmostEqual(mutual_coherence(manual_dictionary(atoms)), 1.0, places=12)

    def test_single_atom_raises(self):
        with self.assertRaises(DictionaryError):
            mutual_coherence(manual_dictionary(self.ad.atoms[:, :1]))

    def test_far_field_atom_is_captured(self):
        h = steering_planar(self.geom, 1 / 8, -3 / 8)
        self.assertAlmostEqual(captured_energy(self.ad, h), 1.0, places=9)
        self.assertEqual(atoms_for_energy(self.ad, h, 0.9), 1)


class PolarDictionaryTestCase(unittest.TestCase):
    def setUp(self):
        self.geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        self.bounds = region_boundaries(self.geom)

    def test_size_and_unit_norm(self):
        pd = build_pd_dictionary(self.geom, beta=1.55, r_min=0.05, r_max=self.bounds.rayleigh_distance)
        self.assertEqual(pd.size, 64 * (pd.distance_levels + 1))
        self.assertEqual(pd.level_count, pd.distance_levels + 1)
        np.testing.assert_allclose(np.linalg.norm(pd.atoms, axis=0), 1.0, atol=1e-12)
        # each angle block starts with the planar atom
        self.assertTrue(np.all(np.isinf(pd.grid[::pd.level_count, 2])))

    def test_level_count_scales_with_beta(self):
        geom = ArrayGeometry(n_h=32, n_v=32, wavelength=0.01)
        fine = pd_level_count(geom, 1.55, 0.02, np.inf)
        coarse = pd_level_count(geom, 3.10, 0.02, np.inf)
        self.assertTrue(3.0 <= fine / coarse <= 5.0, (fine, coarse))

    def test_invalid_interval_raises(self):
        with self.assertRaises(DictionaryError):
            build_pd_dictionary(self.geom, r_min=0.0, r_max=1.0)
        with self.assertRaises(DictionaryError):
            build_pd_dictionary(self.geom, r_min=2.0, r_max=1.0)
        with self.assertRaises(DictionaryError):
            build_pd_dictionary(self.geom, beta=-1.0, r_min=0.1, r_max=1.0)

    def test_memory_limit_is_checked_before_allocation(self):
        self.assertEqual(check_dictionary_memory(64, 64), 64 * 64 * 16)
        with mock.patch.object(config, "DICTIONARY_MEMORY_LIMIT_MB", 0.01):
            with self.assertRaises(DictionaryError):
                build_ad_dictionary(self.geom)
            with self.assertRaises(DictionaryError):
                build_pd_dictionary(self.geom, r_min=0.1, r_max=1.0)

    def test_adjacent_level_coherence(self):
        geom = ArrayGeometry(n_h=64, n_v=1, wavelength=0.01)
        rayleigh = region_boundaries(geom).rayleigh_distance
        pd = build_pd_dictionary(geom, beta=1.55, r_min=0.1, r_max=rayleigh)
        coherence = adjacent_distance_coherence(pd)
        self.assertEqual(coherence.size, pd.distance_levels - 1)
        self.assertTrue(np.all((coherence > 0.45) & (coherence < 0.65)), coherence)

    def test_adjacent_coherence_needs_polar_dictionary(self):
        with self.assertRaises(DictionaryError):
            adjacent_distance_coherence(build_ad_dictionary(self.geom))


class LeakageTestCase(unittest.TestCase):
    def test_polar_atoms_capture_near_field_energy(self):
        geom = ArrayGeometry(n_h=16, n_v=16, wavelength=0.01)
        bounds = region_boundaries(geom)
        ad = build_ad_dictionary(geom)
        pd = build_pd_dictionary(geom, beta=1.55, r_min=0.5 * bounds.fresnel_distance,
                                 r_max=bounds.rayleigh_distance)
        h = steering_exact(geom, Scatterer(u=1 / 16, v=1 / 16, r=0.3))
        self.assertGreater(captured_energy(pd, h), captured_energy(ad, h))

    def test_near_field_leaks_out_of_single_angular_atom(self):
        geom = ArrayGeometry(n_h=16, n_v=16, wavelength=0.01)
        rayleigh = region_boundaries(geom).rayleigh_distance
        ad = build_ad_dictionary(geom)
        near = steering_exact(geom, Scatterer(u=1 / 16, v=1 / 16, r=0.05 * rayleigh))
        far = steering_exact(geom, Scatterer(u=1 / 16, v=1 / 16, r=1e4 * rayleigh))
        self.assertLess(captured_energy(ad, near), 0.9)
        self.assertGreater(captured_energy(ad, far), 0.999)
        self.assertGreater(atoms_for_energy(ad, near), 1)


if __name__ == '__main__':
    unittest.main()
