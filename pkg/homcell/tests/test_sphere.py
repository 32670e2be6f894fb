"""
 Copyright 2026 Google LLC

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
 """

import unittest
from unittest import mock

import numpy as np
from absl.testing import parameterized

from homcell import homoclinic, sphere
from homcell.errors import ChartInconsistency, ConfigError, FixedPointOnCurve, HypothesisUnmet, NotIsolated
from homcell.sphere import NORTH, SOUTH, SphereFixedPoint, SphereMap
from homcell.tests import fixtures


class ChartTest(unittest.TestCase):
    def test_transition_is_an_involution(self):
        rng = np.random.default_rng(5)
        points = rng.uniform(-3.0, 3.0, (50, 2))
        np.testing.assert_allclose(sphere.to_other_chart(sphere.to_other_chart(points)), points, rtol=1e-12)
        np.testing.assert_allclose(sphere.to_other_chart([2.0, 0.0]), [0.5, 0.0])
        np.testing.assert_allclose(sphere.to_other_chart([0.0, 2.0]), [0.0, -0.5])

    def test_radii(self):
        with self.assertRaises(ValueError):
            fixtures.sphere_from_complex(2.0, r_in=4.0, r_out=2.0)
        self.assertAlmostEqual(fixtures.sphere_dilation().split_radius, np.sqrt(8.0))

    def test_consistent_charts(self):
        self.assertLess(sphere.chart_consistency(fixtures.sphere_spiral()), 1e-12)

    def test_inconsistent_charts(self):
        g = SphereMap(fixtures.linear(np.eye(2) * 2.0), fixtures.linear(np.eye(2) * 0.4))
        with self.assertRaises(ChartInconsistency) as ctx:
            sphere.chart_consistency(g)
        self.assertGreater(ctx.exception.diagnostics["disagreement"], 0.02)

    def test_sphere_from_spec(self):
        g = sphere.sphere_from_spec(fixtures.sphere_spec(complex(2.0, 0.0)))
        self.assertEqual((g.r_in, g.r_out), (2.0, 4.0))
        spec = fixtures.sphere_spec(complex(2.0, 0.0))
        test_cases = [
            {"desc": "not an object", "spec": [1, 2]},
            {"desc": "unknown key", "spec": {**spec, "east": {}}},
            {"desc": "missing south", "spec": {k: v for k, v in spec.items() if k != "south"}},
            {"desc": "radii reversed", "spec": {**spec, "r_in": 5.0}},
            {"desc": "zero radius", "spec": {**spec, "r_in": 0.0}},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                with self.assertRaises(ConfigError):
                    sphere.sphere_from_spec(tc["spec"])


class TotalIndexTest(parameterized.TestCase):
    @parameterized.named_parameters(
        ("rotation", fixtures.sphere_rotation),
        ("dilation", fixtures.sphere_dilation),
        ("spiral", fixtures.sphere_spiral),
    )
    def test_total_index_is_two(self, make):
        report = sphere.sphere_index_report(make())
        self.assertEqual(report.total, 2)
        self.assertEqual(report.total_by_winding, 2)
        self.assertEqual((report.north_winding, report.south_winding), (1, 1))
        self.assertTrue(report.consistent)
        self.assertEqual(sorted(fp.chart for fp in report.fixed_points), [NORTH, SOUTH])
        for fp in report.fixed_points:
            np.testing.assert_allclose(fp.record.location, [0.0, 0.0], atol=1e-10)
        self.assertEqual(report.indices(), [1, 1])
        self.assertEqual(report.to_json()["fixed_points"][0]["chart"], NORTH)

    def test_total_index(self):
        self.assertEqual(sphere.total_index(fixtures.sphere_dilation(3.0)), 2)

    def test_uncertified_index_is_not_isolated(self):
        failure = FixedPointOnCurve("displacement vanishes on the index circle")
        with mock.patch.object(sphere, "index_at_point", side_effect=failure):
            with self.assertRaises(NotIsolated) as ctx:
                sphere.total_index(fixtures.sphere_dilation(3.0))
        self.assertIn("displacement vanishes", str(ctx.exception))
        self.assertTrue(ctx.exception.diagnostics["errors"])

    def test_three_fixed_points_check(self):
        report = sphere.sphere_index_report(fixtures.sphere_rotation())
        self.assertIsNone(sphere.three_fixed_points_check(report, has_loop=False)["holds"])
        self.assertFalse(sphere.three_fixed_points_check(report, has_loop=True)["holds"])


class ComponentTest(unittest.TestCase):
    def test_component_indices(self):
        test_cases = [
            {"desc": "loop away from the source", "loop": fixtures.positive_square_loop((0.5, 0.5), 0.5),
             "pair": (0, 2)},
            {"desc": "loop around the source", "loop": fixtures.positive_square_loop((-0.5, -0.5), 1.0),
             "pair": (1, 1)},
        ]
        g = fixtures.sphere_dilation()
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                result = sphere.component_indices(g, tc["loop"])
                self.assertEqual(result.pair, tc["pair"])
                self.assertEqual(result.saddle, 0)
                self.assertEqual(result.total, 2)
                self.assertFalse(result.is_one_two)

    def test_component_hypotheses(self):
        g = fixtures.sphere_dilation()
        test_cases = [
            {"desc": "loop not simple", "loop": fixtures.crossing_loop()},
            {"desc": "loop leaves the z chart", "loop": fixtures.positive_square_loop((0.0, 0.0), 3.0)},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                with self.assertRaises(HypothesisUnmet):
                    sphere.component_indices(g, tc["loop"])


class CountingTest(unittest.TestCase):
    def test_lefschetz_bound(self):
        test_cases = [
            {"desc": "saddle and three centers", "indices": [-1, 1, 1, 1], "rho": 1,
             "lef": 2, "bound": 4, "weak": 4, "satisfied": True},
            {"desc": "negative cell", "indices": [-1, 1, 1, 1], "rho": 2,
             "lef": 2, "bound": 4, "weak": 4, "satisfied": True},
            {"desc": "too few points", "indices": [1, 1, 0], "rho": 1,
             "lef": 2, "bound": 4, "weak": 4, "satisfied": False},
            {"desc": "zero lefschetz number", "indices": [-1, 1], "rho": 2,
             "lef": 0, "bound": 4, "weak": 2, "satisfied": False},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                report = sphere.lefschetz_bound_check(tc["indices"], tc["rho"])
                self.assertEqual(report.lefschetz, tc["lef"])
                self.assertEqual(report.bound, tc["bound"])
                self.assertEqual(report.weak_bound, tc["weak"])
                self.assertEqual(report.satisfied, tc["satisfied"])
                self.assertTrue(report.chain_holds)
                doc = report.to_json()
                self.assertEqual(doc["diagnostic"] is None, tc["satisfied"])

    def test_lefschetz_inputs(self):
        cell = homoclinic.cell_from_loop(fixtures.positive_square_loop())
        saddle = fixtures.saddle_record()
        source = fixtures.saddle_record((1.0, 1.0))
        source.index = 1
        report = sphere.lefschetz_bound_check(
            [SphereFixedPoint(NORTH, saddle), source, SphereFixedPoint(SOUTH, source), 1], cell
        )
        self.assertEqual((report.fixed_point_count, report.lefschetz, report.rho), (4, 2, 1))
        self.assertEqual(sphere.lefschetz_bound_check([1, 1], 1, lefschetz=5).lefschetz, 5)

    def test_lefschetz_hypotheses(self):
        unindexed = fixtures.saddle_record()
        unindexed.index = None
        test_cases = [
            {"desc": "index two", "points": [2, 1]},
            {"desc": "uncertified index", "points": [unindexed]},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                with self.assertRaises(HypothesisUnmet):
                    sphere.lefschetz_bound_check(tc["points"], 1)

    def test_no_cell_certificate(self):
        test_cases = [
            {"desc": "two sources", "indices": [1, 1], "certified": True},
            {"desc": "saddle and three centers", "indices": [-1, 1, 1, 1], "certified": False},
            {"desc": "large index", "indices": [2], "certified": False},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                result = sphere.no_cell_certificate(tc["indices"])
                self.assertEqual(result["no_homoclinic_cell"], tc["certified"])
                self.assertEqual(result["fixed_point_count"], len(tc["indices"]))

    def test_homoclinic_obstruction(self):
        test_cases = [
            {"desc": "three centers", "others": [1, 1, 1], "compatible": True, "split": [[1], [1, 1]]},
            {"desc": "source and index two", "others": [1, 2], "compatible": True, "split": [[1], [2]]},
            {"desc": "no group sums to one", "others": [5, -2], "compatible": False, "split": None},
            {"desc": "wrong total", "others": [1, 1], "compatible": False, "split": None},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                result = sphere.homoclinic_obstruction(tc["others"])
                self.assertEqual(result["compatible"], tc["compatible"])
                self.assertEqual(result["split"], tc["split"])
                self.assertEqual(result["reason"] is None, tc["compatible"])


if __name__ == "__main__":
    unittest.main()
