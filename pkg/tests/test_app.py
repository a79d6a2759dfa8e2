"""
Tests for the HTTP API
"""

import unittest

from app import app

GEOMETRY = {"n_h": 16, "n_v": 16, "wavelength": 0.01}


class ApiTestCase(unittest.TestCase):
    def setUp(self):
        self.client = app.test_client()

    def test_health(self):
        response = self.client.get('/api/health')
        self.assertEqual(response.status_code, 200)
        data = response.get_json()
        self.assertEqual(data["status"], "healthy")
        self.assertIn("TPD-MUSIC", data["methods"])

    def test_complexity(self):
        response = self.client.post('/api/complexity', json={"geometry": GEOMETRY, "pd_levels": 8})
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.get_json()["counts"], {"AD": 256, "PD": 2304, "TPD": 48})

    def test_info(self):
        response = self.client.post('/api/info', json={"geometry": GEOMETRY})
        self.assertEqual(response.status_code, 200)
        self.assertGreater(response.get_json()["boundaries"]["rayleigh_distance"], 0)

    def test_invalid_geometry(self):
        response = self.client.post('/api/complexity', json={"geometry": {**GEOMETRY, "n_h": 0}})
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.get_json()["error_type"], "input_error")

    def test_missing_body(self):
        response = self.client.post('/api/info')
        self.assertEqual(response.status_code, 400)

    def test_domain_failure(self):
        response = self.client.post('/api/info', json={"geometry": {"n_h": 1, "n_v": 1, "wavelength": 0.01}})
        self.assertEqual(response.status_code, 500)
        self.assertEqual(response.get_json()["error_type"], "geometry_error")

    def test_estimate(self):
        body = {
            "seed": 5,
            "geometry": {"n_h": 8, "n_v": 8, "wavelength": 0.01},
            "scenario": {"clusters": 1, "scatterers_per_cluster": 2, "distance": 0.3, "snapshots": 20},
            "methods": ["AD-OMP", "TPD-OMP"],
        }
        response = self.client.post('/api/estimate', json=body)
        self.assertEqual(response.status_code, 200)
        data = response.get_json()
        self.assertEqual(len(data["truth"]), 2)
        self.assertEqual(set(data["metrics"]), {"AD-OMP", "TPD-OMP"})


if __name__ == '__main__':
    unittest.main()
