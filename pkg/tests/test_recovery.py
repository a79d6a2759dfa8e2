"""
Tests for parameter recovery: sparse coding, MUSIC, TPD angle and distance
recovery and off-grid refinement
"""

import math
import unittest

import numpy as np
import pytest

from models import ArrayGeometry, Estimate, EstimateSet, MethodTag, ModelFlag, Scatterer
from services import method_registry, resolve_grid_plan
from services.channel import synthesize_snapshots
from services.dictionaries import angle_grid, build_ad_dictionary
from services.geometry import index_grid, region_boundaries
from services.recovery import (
    alias_candidates, beam_scores, default_cells, line_grid, music_1d, music_dictionary, music_pseudospectrum,
    omp, omp_support, pair_and_disambiguate, peak_confidence, refine_offgrid, refinement_objective,
    step3_atoms, tpd_distance_grid, tpd_recover_angles, tpd_recover_distance,
)
from services.tpd import decompose, step1_angular_product
from utils import RecoveryError


def tones(frequencies, length, snapshots, snr_db, seed):
    rng = np.random.default_rng(seed)
    A = np.exp(1j * np.outer(np.arange(length), frequencies))
    S = (rng.standard_normal((len(frequencies), snapshots))
         + 1j * rng.standard_normal((len(frequencies), snapshots))) / math.sqrt(2)
    sigma = math.sqrt(10 ** (-snr_db / 10) / 2)
    noise = sigma * (rng.standard_normal((length, snapshots)) + 1j * rng.standard_normal((length, snapshots)))
    return A @ S + noise


def fixed_gain_snapshots(geom, scene, model=ModelFlag.FRESNEL):
    return synthesize_snapshots(geom, scene, 1, math.inf, model, gains=np.ones((1, len(scene))))


# xxxxxxxxxxxxxxx Orthogonal matching pursuit xxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class OmpTestCase(unittest.TestCase):
    def setUp(self):
        self.ad = build_ad_dictionary(ArrayGeometry(n_h=8, n_v=8, wavelength=0.01))

    def test_one_sparse_recovery(self):
        result = omp_support(3.0 * self.ad.atoms[:, 17], self.ad.atoms, 1)
        self.assertEqual(result.support, [17])
        self.assertAlmostEqual(result.coefficients[0, 0], 3.0, places=10)

        estimates = omp(3.0 * self.ad.atoms[:, 17], self.ad, 1)
        self.assertAlmostEqual(estimates.entries[0].u, self.ad.grid[17, 0])
        self.assertAlmostEqual(estimates.entries[0].v, self.ad.grid[17, 1])
        self.assertEqual(estimates.search_space_size, 64)

    def test_orthonormal_k_sparse_is_exact(self):
        support = [3, 40, 22]
        y = self.ad.atoms[:, support] @ np.array([2.0, -1.0 + 0.5j, 0.7j])
        result = omp_support(y, self.ad.atoms, 3)
        self.assertEqual(sorted(result.support), sorted(support))
        self.assertLess(result.residual_norms[-1], 1e-10)

    def test_residuals_never_increase(self):
        rng = np.random.default_rng(5)
        y = rng.standard_normal((64, 4)) + 1j * rng.standard_normal((64, 4))
        norms = omp_support(y, self.ad.atoms, 10).residual_norms
        self.assertTrue(all(b <= a + 1e-12 for a, b in zip(norms, norms[1:])))

    def test_sparsity_beyond_dictionary_raises(self):
        with self.assertRaises(RecoveryError):
            omp_support(self.ad.atoms[:, 0], self.ad.atoms[:, :4], 5)
        with self.assertRaises(RecoveryError):
            omp_support(self.ad.atoms[:, 0], self.ad.atoms, 0)

    def test_duplicate_atom_is_flagged(self):
        atoms = self.ad.atoms[:, [0, 0, 9]]
        result = omp_support(atoms[:, 0] + atoms[:, 2], atoms, 3)
        self.assertEqual(result.support, [0, 2])
        self.assertIn("rank_deficient_atom", result.flags)
        self.assertIn("omp_exhausted", result.flags)


# xxxxxxxxxxxxxxx MUSIC xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class MusicTestCase(unittest.TestCase):
    def setUp(self):
        self.grid = np.linspace(-math.pi, math.pi, 2048, endpoint=False)
        self.cell = 2 * math.pi / 16

    def test_single_tone(self):
        data = tones([0.7], 16, 50, 20.0, 1)
        peaks = music_1d(data, self.grid, 1)
        self.assertEqual(len(peaks), 1)
        self.assertLess(abs(peaks[0].frequency - 0.7), self.cell / 2)

    def test_resolves_two_tones(self):
        truth = [0.3, 0.3 + 2 * self.cell]
        peaks = music_1d(tones(truth, 16, 20, 20.0, 2), self.grid, 2)
        found = sorted(p.frequency for p in peaks)
        np.testing.assert_allclose(found, truth, atol=self.cell / 2)

    def test_noise_only_peak_has_low_confidence(self):
        rng = np.random.default_rng(3)
        data = rng.standard_normal((16, 200)) + 1j * rng.standard_normal((16, 200))
        spectrum = music_pseudospectrum(data, self.grid, 1)
        self.assertLess(peak_confidence(spectrum, spectrum.max()), 10.0)
        peaks = music_1d(data, self.grid, 1)
        self.assertLess(peaks[0].confidence, 10.0)
        self.assertGreater(music_1d(tones([0.7], 16, 50, 20.0, 1), self.grid, 1)[0].confidence, 10.0)

    def test_noise_only_dictionary_music_is_flagged(self):
        geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        dictionary = build_ad_dictionary(geom, (1, 1))
        rng = np.random.default_rng(9)
        noise = (rng.standard_normal((64, 100)) + 1j * rng.standard_normal((64, 100))) / math.sqrt(2)
        est = music_dictionary(noise, dictionary, 1)
        self.assertIn("low_confidence_peak", est.flags)

        source = dictionary.atoms[:, [10]] * np.exp(1j * rng.uniform(0, 2 * math.pi, (1, 100))) * 8.0
        est = music_dictionary(source + 0.1 * noise, dictionary, 1)
        self.assertNotIn("low_confidence_peak", est.flags)
        self.assertAlmostEqual(est.entries[0].u, dictionary.grid[10, 0])

    def test_noise_only_tpd_music_is_flagged(self):
        geom = ArrayGeometry(n_h=16, n_v=16, wavelength=0.01)
        obs = synthesize_snapshots(geom, [Scatterer(u=0.2, v=0.1, r=1.0)], 50, -40.0, rng_seed=5)
        est = method_registry.solve(MethodTag.TPD_MUSIC, obs, 1, resolve_grid_plan(geom))
        self.assertIn("low_confidence_peak", est.flags)

    def test_scale_invariance(self):
        data = tones([-1.1, 0.4], 12, 30, 15.0, 4)
        np.testing.assert_allclose(music_pseudospectrum(data, self.grid, 2),
                                   music_pseudospectrum(5.0 * data, self.grid, 2), rtol=1e-6)

    def test_smoothing_with_few_snapshots(self):
        n = np.arange(16)
        data = np.exp(0.5j * n) + 0.8 * np.exp(-0.9j * n + 0.3j)
        peaks = music_1d(data, self.grid, 2)
        np.testing.assert_allclose(sorted(p.frequency for p in peaks), [-0.9, 0.5], atol=self.cell / 2)

    def test_order_must_leave_noise_subspace(self):
        with self.assertRaises(RecoveryError):
            music_pseudospectrum(tones([0.1], 8, 20, 10.0, 0), self.grid, 8)


# xxxxxxxxxxxxxxx TPD angles and aliasing xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class AliasTestCase(unittest.TestCase):
    def test_alias_candidates(self):
        np.testing.assert_allclose(alias_candidates(0.8, 1.0), [-0.2, 0.8])
        np.testing.assert_allclose(alias_candidates(0.0, 1.0), [-1.0, 0.0, 1.0])

    def test_aliased_directions_share_angular_product(self):
        geom = ArrayGeometry(n_h=7, n_v=7, wavelength=0.01)
        a = fixed_gain_snapshots(geom, [Scatterer(u=0.8, v=0.1, r=0.5)])
        b = fixed_gain_snapshots(geom, [Scatterer(u=-0.2, v=0.1, r=0.5)])
        np.testing.assert_allclose(step1_angular_product(a, geom), step1_angular_product(b, geom), atol=1e-9)

        scores = beam_scores(a, geom, np.array([0.8, -0.2]), np.array([0.1, 0.1]))
        self.assertGreater(scores[0], scores[1])

    def test_line_grid_folds_aliases(self):
        geom = ArrayGeometry(n_h=32, n_v=32, wavelength=0.01)
        values, frequencies = line_grid(geom, 32, 1)
        self.assertEqual(values.size, 16)
        self.assertTrue(np.all(np.abs(values) < 0.5))
        self.assertEqual(np.unique(np.round(frequencies, 9)).size, 16)


class TpdAngleTestCase(unittest.TestCase):
    def setUp(self):
        self.geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        self.obs = fixed_gain_snapshots(self.geom, [Scatterer(u=3 / 8, v=-1 / 8, r=0.2)])
        self.seq = decompose(self.obs, self.geom, noise_floor="none")

    def test_music_lines(self):
        v_set, u_set = tpd_recover_angles(self.seq, self.geom, 1, "music")
        self.assertAlmostEqual(v_set[0], -1 / 8)
        self.assertAlmostEqual(u_set[0], 3 / 8)

    def test_omp_lines(self):
        v_set, u_set = tpd_recover_angles(self.seq, self.geom, 1, "omp")
        self.assertAlmostEqual(v_set[0], -1 / 8)
        self.assertAlmostEqual(u_set[0], 3 / 8)

    def test_unknown_algorithm(self):
        with self.assertRaises(RecoveryError):
            tpd_recover_angles(self.seq, self.geom, 1, "esprit")


class PairingTestCase(unittest.TestCase):
    def setUp(self):
        self.geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)

    def observe(self, scene):
        obs = synthesize_snapshots(self.geom, scene, 200, math.inf, ModelFlag.FRESNEL, rng_seed=8)
        return obs, decompose(obs, self.geom, noise_floor="none")

    def test_single_pair_picks_visible_alias(self):
        obs, seq = self.observe([Scatterer(u=-5 / 8, v=1 / 8, r=1000.0)])
        pairs = pair_and_disambiguate([3 / 8], [1 / 8], seq, obs, self.geom, 1)
        np.testing.assert_allclose(pairs, [(-5 / 8, 1 / 8)])

    def test_association_and_permutation_invariance(self):
        scene = [Scatterer(u=3 / 8, v=-3 / 8, r=1000.0), Scatterer(u=-1 / 8, v=1 / 8, r=1000.0)]
        obs, seq = self.observe(scene)
        expected = {(0.375, -0.375), (-0.125, 0.125)}
        for u_set, v_set in (([3 / 8, -1 / 8], [1 / 8, -3 / 8]), ([-1 / 8, 3 / 8], [-3 / 8, 1 / 8])):
            pairs = pair_and_disambiguate(u_set, v_set, seq, obs, self.geom, 2)
            self.assertEqual({(round(u, 9), round(v, 9)) for u, v in pairs}, expected)

    def test_repeated_elevation(self):
        scene = [Scatterer(u=3 / 8, v=1 / 8, r=1000.0), Scatterer(u=-1 / 8, v=1 / 8, r=1000.0)]
        obs, seq = self.observe(scene)
        pairs = pair_and_disambiguate([3 / 8, -1 / 8], [1 / 8, 1 / 8], seq, obs, self.geom, 2)
        self.assertEqual(len(pairs), 2)
        np.testing.assert_allclose([v for _, v in pairs], [1 / 8, 1 / 8])
        np.testing.assert_allclose(sorted(u for u, _ in pairs), [-1 / 8, 3 / 8])


# xxxxxxxxxxxxxxx TPD distances xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class DistanceTestCase(unittest.TestCase):
    def setUp(self):
        self.geom = ArrayGeometry(n_h=32, n_v=32, wavelength=0.01)
        self.bounds = region_boundaries(self.geom)
        self.r_min = 0.5 * self.bounds.fresnel_distance
        self.r_grid = tpd_distance_grid(self.r_min, math.inf, 32)
        self.step = (1 / self.r_min) / 31
        self.reference = (16, 16)

    def ideal_c(self, scene):
        c = np.zeros(self.geom.n_elements, dtype=complex)
        for s in scene:
            c += s.power * step3_atoms(self.geom, s.u, s.v, np.array([1 / s.r]), self.reference)[:, 0]
        return c * math.sqrt(self.geom.n_elements)

    def test_distance_grid(self):
        self.assertTrue(math.isinf(self.r_grid[0]))
        self.assertAlmostEqual(self.r_grid[-1], self.r_min)
        np.testing.assert_allclose(np.diff(1 / self.r_grid[1:]), self.step)

    def test_two_scatterers_within_one_cell(self):
        scene = [Scatterer(u=0.2, v=0.1, r=5.0), Scatterer(u=-0.3, v=-0.1, r=2.0, power=0.7)]
        distances = tpd_recover_distance(self.ideal_c(scene), [(s.u, s.v) for s in scene],
                                         self.geom, self.r_grid, self.reference)
        for s, r in zip(scene, distances):
            self.assertLessEqual(abs(1 / r - 1 / s.r), self.step)

    def test_far_scatterer_is_planar(self):
        s = Scatterer(u=0.1, v=0.2, r=10 * self.bounds.rayleigh_distance)
        flags = []
        distances = tpd_recover_distance(self.ideal_c([s]), [(s.u, s.v)], self.geom, self.r_grid,
                                         self.reference, flags=flags)
        self.assertTrue(math.isinf(distances[0]))
        self.assertIn("far_field_distance", flags)

    def test_empty_grid_raises(self):
        with self.assertRaises(RecoveryError):
            tpd_recover_distance(np.zeros(1024), [(0.0, 0.0)], self.geom, np.array([]), self.reference)


# xxxxxxxxxxxxxxx End-to-end methods xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class MethodPipelineTestCase(unittest.TestCase):
    def setUp(self):
        self.geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        self.plan = resolve_grid_plan(self.geom)

    def test_tpd_recovers_on_grid_scatterer(self):
        r = float(self.plan.tpd_r_grid[2])
        obs = fixed_gain_snapshots(self.geom, [Scatterer(u=-5 / 8, v=1 / 8, r=r)])
        for tag in (MethodTag.TPD_MUSIC, MethodTag.TPD_OMP):
            estimates = method_registry.solve(tag, obs, 1, self.plan)
            self.assertEqual(estimates.method_tag, tag)
            self.assertEqual(estimates.search_space_size, 8 + 8 + self.plan.tpd_levels)
            e = estimates.entries[0]
            self.assertAlmostEqual(e.u, -5 / 8)
            self.assertAlmostEqual(e.v, 1 / 8)
            self.assertAlmostEqual(e.r, r, delta=1e-9 * r)
            self.assertAlmostEqual(e.power, 1.0, places=6)

    def test_angular_omp_on_planar_scatterer(self):
        obs = fixed_gain_snapshots(self.geom, [Scatterer(u=1 / 8, v=-3 / 8, r=1e7)], ModelFlag.EXACT)
        estimates = method_registry.solve(MethodTag.AD_OMP, obs, 1, self.plan)
        self.assertAlmostEqual(estimates.entries[0].u, 1 / 8)
        self.assertAlmostEqual(estimates.entries[0].v, -3 / 8)
        self.assertTrue(math.isinf(estimates.entries[0].r))

    def test_unknown_tag(self):
        from utils import ConfigError
        with self.assertRaises(ConfigError):
            method_registry.resolve(["XD-OMP"])


# xxxxxxxxxxxxxxx Off-grid refinement xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class RefinementTestCase(unittest.TestCase):
    def setUp(self):
        self.geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        self.r = 0.15

    def estimates(self, u, v):
        return EstimateSet(entries=[Estimate(u=u, v=v, r=self.r, power=1.0)], method_tag=MethodTag.PD_OMP)

    def test_on_grid_estimate_stays(self):
        obs = fixed_gain_snapshots(self.geom, [Scatterer(u=0.125, v=-0.125, r=self.r)])
        refined = refine_offgrid(self.estimates(0.125, -0.125), obs, self.geom, cells=(0.25, 0.25, 0.0))
        self.assertAlmostEqual(refined.entries[0].u, 0.125, places=9)
        self.assertAlmostEqual(refined.entries[0].v, -0.125, places=9)
        self.assertIn("refined", refined.flags)

    def test_off_grid_error_shrinks(self):
        obs = fixed_gain_snapshots(self.geom, [Scatterer(u=0.2, v=-0.125, r=self.r)])
        start = self.estimates(0.125, -0.125)
        refined = refine_offgrid(start, obs, self.geom, cells=(0.25, 0.25, 0.0))
        self.assertLess(abs(refined.entries[0].u - 0.2), 0.1 * abs(0.125 - 0.2))

        def params(est):
            return [(e.u, e.v, e.inverse_distance) for e in est.entries]

        self.assertGreaterEqual(refinement_objective(obs, self.geom, params(refined)),
                                refinement_objective(obs, self.geom, params(start)))

    def test_default_cells_cover_inverse_distance(self):
        cells = default_cells(self.geom)
        self.assertGreater(cells[2], 0.0)
        self.assertAlmostEqual(cells[2], resolve_grid_plan(self.geom).rho_step)

    def test_inverse_distance_is_refined_by_default(self):
        obs = fixed_gain_snapshots(self.geom, [Scatterer(u=0.125, v=-0.125, r=self.r)])
        truth = 1 / self.r
        start = EstimateSet(entries=[Estimate(u=0.125, v=-0.125, r=1 / (truth + 2.0), power=1.0)],
                            method_tag=MethodTag.TPD_MUSIC)
        refined = refine_offgrid(start, obs, self.geom)
        self.assertLess(abs(refined.entries[0].inverse_distance - truth), 0.2)


@pytest.mark.slow
class NoiselessOracleTestCase(unittest.TestCase):
    def test_tpd_matches_exhaustive_search(self):
        geom = ArrayGeometry(n_h=16, n_v=16, wavelength=0.01)
        plan = resolve_grid_plan(geom)
        axis = angle_grid(16)
        r_grid = plan.tpd_r_grid
        rho = np.where(np.isinf(r_grid), 0.0, 1.0 / np.where(np.isinf(r_grid), 1.0, r_grid))

        uu, vv = np.meshgrid(axis, axis)
        visible = uu ** 2 + vv ** 2 <= 1.0
        grid_u, grid_v = uu[visible], vv[visible]
        pos = index_grid(geom) * geom.spacing
        linear = np.outer(pos[:, 0], grid_u) + np.outer(pos[:, 1], grid_v)
        quadratic = (np.sum(pos ** 2, axis=1)[:, None] - linear ** 2) / 2
        atoms = np.exp(-1j * geom.wavenumber * (quadratic[:, :, None] * rho[None, None, :] - linear[:, :, None]))

        rng = np.random.default_rng(2024)
        cases = 0
        while cases < 100:
            u, v = (float(x) for x in rng.choice(axis, 2))
            if u * u + v * v > 0.8:
                continue
            level = int(rng.integers(1, plan.tpd_levels // 2 + 1))
            obs = fixed_gain_snapshots(geom, [Scatterer(u=u, v=v, r=float(r_grid[level]))])

            score = np.abs(np.einsum("nas,n->as", atoms.conj(), obs.snapshots[0]))
            best_angle, best_level = np.unravel_index(np.argmax(score), score.shape)
            self.assertAlmostEqual(grid_u[best_angle], u)
            self.assertAlmostEqual(grid_v[best_angle], v)
            self.assertEqual(best_level, level)

            e = method_registry.solve(MethodTag.TPD_MUSIC, obs, 1, plan).entries[0]
            self.assertAlmostEqual(e.u, u, msg=(u, v, level))
            self.assertAlmostEqual(e.v, v, msg=(u, v, level))
            self.assertAlmostEqual(e.r, float(r_grid[level]), delta=1e-9, msg=(u, v, level))
            cases += 1

    def test_refinement_never_lowers_objective(self):
        geom = ArrayGeometry(n_h=8, n_v=8, wavelength=0.01)
        plan = resolve_grid_plan(geom)
        rng = np.random.default_rng(11)
        for trial in range(20):
            scene = [Scatterer(u=float(rng.uniform(-0.5, 0.5)), v=float(rng.uniform(-0.5, 0.5)),
                               r=float(rng.uniform(0.05, 0.5))) for _ in range(2)]
            obs = synthesize_snapshots(geom, scene, 10, 15.0, rng_seed=trial)
            coarse = method_registry.solve(MethodTag.PD_OMP, obs, 2, plan)
            refined = method_registry.solve(MethodTag.PD_OMP, obs, 2, plan, refine=True)

            def params(est):
                return [(e.u, e.v, e.inverse_distance) for e in est.entries]

            self.assertGreaterEqual(refinement_objective(obs, geom, params(refined)),
                                    refinement_objective(obs, geom, params(coarse)) * (1 - 1e-9))



if __name__ == '__main__':
    unittest.main()
