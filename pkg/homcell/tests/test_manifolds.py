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

import numpy as np

from homcell import manifolds
from homcell.config import GrowthParams
from homcell.errors import LeftWorkingRectangle, NotASaddle, OutOfRange
from homcell.fixed_points import make_record, newton_refine
from homcell.manifolds import MINUS, PLUS, STABLE, UNSTABLE
from homcell.map_model import builtin_map
from homcell.tests import fixtures

LINEAR_SADDLE = {"lambda": 0.5, "mu": 2.0}


def linear_saddle(rect=(-10.0, 10.0, -10.0, 10.0)):
    f = builtin_map("linear_saddle", LINEAR_SADDLE, rect)
    return f, make_record(f, 1, np.zeros(2))


def henon_saddle():
    f = builtin_map("henon", {"a": 1.4, "b": 0.3})
    return f, make_record(f, 1, newton_refine(f, 1, [0.7, 0.7]))


class SeedTest(unittest.TestCase):
    def test_saddle_directions(self):
        f, saddle = linear_saddle()
        m, (lam_s, v_s), (lam_u, v_u) = manifolds.saddle_directions(f, saddle)
        self.assertEqual(m, 1)
        self.assertEqual((lam_s, lam_u), (0.5, 2.0))
        np.testing.assert_allclose(v_s, [1.0, 0.0])
        np.testing.assert_allclose(v_u, [0.0, 1.0])

    def test_seed_branch(self):
        test_cases = [
            {"desc": "unstable plus", "kind": UNSTABLE, "side": PLUS, "q": [0.0, 1e-4], "gq": [0.0, 2e-4]},
            {"desc": "unstable minus", "kind": UNSTABLE, "side": MINUS, "q": [0.0, -1e-4], "gq": [0.0, -2e-4]},
            {"desc": "stable plus", "kind": STABLE, "side": PLUS, "q": [1e-4, 0.0], "gq": [2e-4, 0.0]},
            {"desc": "stable minus", "kind": STABLE, "side": MINUS, "q": [-1e-4, 0.0], "gq": [-2e-4, 0.0]},
        ]
        f, saddle = linear_saddle()
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                branch = manifolds.seed_branch(f, saddle, tc["kind"], tc["side"], delta=1e-4)
                np.testing.assert_allclose(branch.q, tc["q"], rtol=1e-12, atol=1e-15)
                np.testing.assert_allclose(branch.gq, tc["gq"], rtol=1e-12, atol=1e-15)
                np.testing.assert_array_equal(branch.points[0], saddle.location)
                self.assertEqual(branch.params[0], 0.0)
                self.assertEqual(branch.params[1], 1.0)
                self.assertEqual(branch.params[-1], 2.0)
                self.assertEqual(branch.name, f"{tc['kind']}_{tc['side']}")

    def test_seed_errors(self):
        f, saddle = linear_saddle()
        rotation = builtin_map("rotation", {"theta": 0.5})
        test_cases = [
            {"desc": "delta too large", "call": lambda: manifolds.seed_branch(f, saddle, UNSTABLE, PLUS, 0.1),
             "error": ValueError},
            {"desc": "delta too small", "call": lambda: manifolds.seed_branch(f, saddle, UNSTABLE, PLUS, 1e-12),
             "error": ValueError},
            {"desc": "unknown side", "call": lambda: manifolds.seed_branch(f, saddle, UNSTABLE, "left"),
             "error": ValueError},
            {"desc": "elliptic point",
             "call": lambda: manifolds.seed_branch(rotation, make_record(rotation, 1, np.zeros(2)), UNSTABLE, PLUS),
             "error": NotASaddle},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                with self.assertRaises(tc["error"]):
                    tc["call"]()

    def test_twisted_saddle_grows_with_second_iterate(self):
        f, saddle = henon_saddle()
        branch = manifolds.seed_branch(f, saddle, UNSTABLE, PLUS)
        self.assertEqual(branch.iterate, 2)
        self.assertGreater(branch.eigenvalue, 1.0)


class GrowTest(unittest.TestCase):
    def test_linear_unstable_branch(self):
        f, saddle = linear_saddle()
        branch = manifolds.grow_branch(
            f, manifolds.seed_branch(f, saddle, UNSTABLE, PLUS, 1e-4), GrowthParams(target_arclength=1.0)
        )
        self.assertEqual(branch.stop_reason, "arclength")
        self.assertTrue(np.all(branch.points[:, 0] == 0.0))
        self.assertTrue(np.all(np.diff(branch.points[:, 1]) > 0))
        self.assertTrue(np.all(np.diff(branch.params) > 0))
        self.assertGreaterEqual(branch.arclength, 1.0)
        self.assertLess(branch.arclength, 1.0 + 0.05)
        # The image of the vertex at t is the vertex at t + 1.
        lookup = {round(t, 9): p for t, p in zip(branch.params, branch.points)}
        for t, p in zip(branch.params, branch.points):
            image = lookup.get(round(t + 1.0, 9))
            if t >= 1.0 and image is not None:
                np.testing.assert_allclose(f(p), image, rtol=1e-12)

    def test_default_seed_leaves_the_return_disc(self):
        test_cases = [
            {"desc": "unstable plus", "kind": UNSTABLE, "side": PLUS},
            {"desc": "stable minus", "kind": STABLE, "side": MINUS},
        ]
        f, saddle = linear_saddle()
        growth = GrowthParams(target_arclength=1.0)
        self.assertLess(growth.delta, growth.return_radius)
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                seeded = manifolds.seed_branch(f, saddle, tc["kind"], tc["side"], growth.delta)
                branch = manifolds.grow_branch(f, seeded, growth)
                self.assertEqual(branch.stop_reason, "arclength")
                self.assertGreaterEqual(branch.arclength, 1.0)

    def test_henon_branch_shadows_its_image(self):
        f, saddle = henon_saddle()
        branch = manifolds.grow_branch(
            f,
            manifolds.seed_branch(f, saddle, UNSTABLE, PLUS),
            GrowthParams(target_arclength=2.0, h_max=0.01, alpha_max=0.05),
        )
        self.assertEqual(branch.stop_reason, "arclength")
        self.assertLess(manifolds.shadow_defect(f, branch), 1e-3)
        segments = np.linalg.norm(np.diff(branch.points[1:], axis=0), axis=1)
        self.assertLessEqual(segments.max(), 0.01)

    def test_evaluate_branch_is_equivariant(self):
        f, saddle = henon_saddle()
        branch = manifolds.grow_branch(
            f, manifolds.seed_branch(f, saddle, UNSTABLE, MINUS), GrowthParams(target_arclength=1.5)
        )
        g = manifolds.branch_map(f, branch.kind, branch.iterate)
        rng = np.random.default_rng(3)
        ts = rng.uniform(1.0, branch.params[-1] - 1.0, 50)
        here = manifolds.evaluate_branch(f, branch, ts)
        there = manifolds.evaluate_branch(f, branch, ts + 1.0)
        np.testing.assert_allclose(g(here), there, atol=1e-12)
        with self.assertRaises(OutOfRange):
            manifolds.evaluate_branch(f, branch, [0.5])

    def test_stop_reasons(self):
        test_cases = [
            {"desc": "iteration budget", "overrides": {"max_iterations": 3, "target_arclength": 100.0},
             "rect": (-100.0, 100.0, -100.0, 100.0), "reason": "max_iterations"},
            {"desc": "arclength target", "overrides": {"target_arclength": 0.5},
             "rect": (-100.0, 100.0, -100.0, 100.0), "reason": "arclength"},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                f, saddle = linear_saddle(tc["rect"])
                seeded = manifolds.seed_branch(f, saddle, STABLE, MINUS, 1e-4)
                branch = manifolds.grow_branch(f, seeded, **tc["overrides"])
                self.assertEqual(branch.stop_reason, tc["reason"])

    def test_left_working_rectangle(self):
        f, saddle = linear_saddle((-1.0, 1.0, -1.0, 1.0))
        seeded = manifolds.seed_branch(f, saddle, UNSTABLE, PLUS, 1e-4)
        with self.assertRaises(LeftWorkingRectangle) as ctx:
            manifolds.grow_branch(f, seeded, target_arclength=5.0)
        partial = ctx.exception.partial
        self.assertEqual(partial.stop_reason, "left_rectangle")
        self.assertTrue(np.all(f.in_rect(partial.points)))
        self.assertGreater(partial.points[-1, 1], 0.5)

    def test_grow_manifolds_keeps_partial_branches(self):
        f, saddle = linear_saddle((-1.0, 1.0, -1.0, 1.0))
        branches = manifolds.grow_manifolds(f, saddle, GrowthParams(target_arclength=5.0))
        self.assertEqual(set(branches), set(manifolds.BRANCH_KEYS))
        for (kind, side), branch in branches.items():
            self.assertEqual((branch.kind, branch.side), (kind, side))
            self.assertEqual(branch.stop_reason, "left_rectangle")


class ParametrizationTest(unittest.TestCase):
    def setUp(self):
        f, saddle = linear_saddle()
        self.branch = manifolds.grow_branch(
            f, manifolds.seed_branch(f, saddle, UNSTABLE, PLUS, 1e-4), target_arclength=1.0
        )

    def test_zeta(self):
        np.testing.assert_array_equal(manifolds.zeta(self.branch, 0.0), [0.0, 0.0])
        np.testing.assert_allclose(manifolds.zeta(self.branch, 1.5), [0.0, 1.5e-4], rtol=1e-12)
        np.testing.assert_allclose(manifolds.zeta(self.branch, 0.5), [0.0, 0.5e-4], rtol=1e-12)
        for t in (-0.1, self.branch.params[-1] + 0.1):
            with self.assertRaises(OutOfRange):
                manifolds.zeta(self.branch, t)

    def test_arc(self):
        t = 4.25
        piece = manifolds.arc(self.branch, t)
        np.testing.assert_array_equal(piece[0], [0.0, 0.0])
        np.testing.assert_allclose(piece[-1], manifolds.zeta(self.branch, t))
        self.assertTrue(np.all(np.diff(piece[:, 1]) >= 0))

    def test_branch_rows(self):
        rows = manifolds.branch_rows(self.branch)
        self.assertEqual(len(rows), len(self.branch.points))
        self.assertEqual(rows[0], (0.0, 0.0, 0.0))


if __name__ == "__main__":
    unittest.main()
