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

import math
import unittest

import numpy as np
from absl.testing import parameterized

from homcell import index
from homcell.errors import FixedPointOnCurve, NotIsolated, RefinementExhausted
from homcell.fixed_points import expected_index, make_record
from homcell.geometry import OrientedPolygon
from homcell.map_model import builtin_map
from homcell.tests import fixtures

ROTATION = [[math.cos(0.9), -math.sin(0.9)], [math.sin(0.9), math.cos(0.9)]]
LINEAR_FIXTURES = {
    "direct_saddle": [[0.5, 0.0], [0.0, 2.0]],
    "twisted_saddle": [[-0.5, 0.0], [0.0, -2.0]],
    "sink": [[0.5, 0.2], [-0.1, 0.4]],
    "source": [[2.0, 0.3], [0.0, 3.0]],
    "elliptic": ROTATION,
}


def winding_fixtures():
    """(name, map, curve, expected degree) for the oracle comparison."""
    circle = OrientedPolygon.circle((0.0, 0.0), 0.5, 16)
    square = OrientedPolygon.from_vertices([[-0.4, -0.3], [0.6, -0.3], [0.6, 0.5], [-0.4, 0.5]])
    away = OrientedPolygon.circle((2.0, 1.0), 0.5, 16)
    cases = []
    for k in range(1, 6):
        cases.append((f"z_minus_z{k}", fixtures.z_minus_zk(k), circle, k))
        cases.append((f"z_minus_conj{k}", fixtures.z_plus_conj_power(k), circle, -k))
    for name, matrix in LINEAR_FIXTURES.items():
        cases.append((f"{name}_square", fixtures.linear(matrix), square, -1 if name == "direct_saddle" else 1))
    cases.append(("saddle_away", fixtures.linear(LINEAR_FIXTURES["direct_saddle"]), away, 0))
    cases.append(("rotation_away", fixtures.linear(ROTATION), away, 0))
    cases.append(("clockwise_z3", fixtures.z_minus_zk(3), circle.reversed(), -3))
    cases.append(("clockwise_saddle", fixtures.linear(LINEAR_FIXTURES["direct_saddle"]), square.reversed(), 1))
    cases.append(("henon_both_fixed_points", builtin_map("henon", {"a": 1.4, "b": 0.3}),
                  OrientedPolygon.from_vertices([[-2.5, -2.5], [1.0, -2.5], [1.0, 1.0], [-2.5, 1.0]]), 0))
    return cases


class IndexTableTest(parameterized.TestCase):
    @parameterized.named_parameters(*[(name, matrix) for name, matrix in LINEAR_FIXTURES.items()])
    def test_linear_index_matches_class(self, matrix):
        f = fixtures.linear(matrix)
        record = make_record(f, 1, np.zeros(2))
        self.assertEqual(index.index_at_point(f, 1, record.location), expected_index(record.classification))

    def test_z_minus_zk(self):
        for k in range(1, 6):
            with self.subTest(k=k):
                self.assertEqual(index.index_at_point(fixtures.z_minus_zk(k), 1, (0.0, 0.0), radius=0.5), k)

    def test_twisted_saddle_squared_is_direct(self):
        f = fixtures.linear(LINEAR_FIXTURES["twisted_saddle"])
        self.assertEqual(index.index_at_point(f, 1, (0.0, 0.0)), 1)
        self.assertEqual(index.index_at_point(f, 2, (0.0, 0.0)), -1)


class WindingOracleTest(parameterized.TestCase):
    @parameterized.named_parameters(*winding_fixtures())
    def test_adaptive_degree_matches_dense_sampling(self, f, curve, expected):
        result = index.index_along_curve(f, curve)
        self.assertEqual(result.degree, expected)
        self.assertTrue(result.certified)
        self.assertEqual(index.sampled_degree(f, curve, samples=10**6), expected)

    def test_refinement_adds_segments(self):
        result = index.index_along_curve(fixtures.z_minus_zk(5), OrientedPolygon.circle((0, 0), 0.5, 16))
        self.assertEqual(result.degree, 5)
        self.assertGreater(result.segment_count, 20)
        self.assertEqual(result.to_json()["segments"], result.segment_count)


class IndexErrorTest(unittest.TestCase):
    def test_errors(self):
        saddle = fixtures.linear(LINEAR_FIXTURES["direct_saddle"])
        test_cases = [
            {
                "desc": "curve through the fixed point",
                "call": lambda: index.index_along_curve(saddle, OrientedPolygon.circle((0.5, 0.0), 0.5, 16)),
                "error": FixedPointOnCurve,
            },
            {
                "desc": "segment budget exhausted",
                "call": lambda: index.index_along_curve(
                    fixtures.z_minus_zk(5), OrientedPolygon.circle((0, 0), 0.5, 16), max_segments=20
                ),
                "error": RefinementExhausted,
            },
            {
                "desc": "identity has no isolated fixed point",
                "call": lambda: index.index_at_point(builtin_map("rotation", {"theta": 0.0}), 1, (0.0, 0.0)),
                "error": NotIsolated,
            },
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                with self.assertRaises(tc["error"]):
                    tc["call"]()

    def test_try_index_at_point(self):
        value, error = index.try_index_at_point(builtin_map("rotation", {"theta": 0.0}), 1, (0.0, 0.0))
        self.assertIsNone(value)
        self.assertIn("not stable", error)
        value, error = index.try_index_at_point(fixtures.linear(ROTATION), 1, (0.0, 0.0))
        self.assertEqual((value, error), (1, None))

    def test_index_of_block(self):
        f = builtin_map("henon", {"a": 1.4, "b": 0.3})
        box = OrientedPolygon.from_vertices([[-2.5, -2.5], [1.0, -2.5], [1.0, 1.0], [-2.5, 1.0]])
        self.assertEqual(index.index_of_block(f, 1, box), 0)
        small = OrientedPolygon.circle((0.7, 0.7), 0.1, 32).reversed()
        self.assertEqual(index.index_of_block(f, 1, small), 1)


if __name__ == "__main__":
    unittest.main()
