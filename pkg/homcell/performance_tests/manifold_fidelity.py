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


import time
import unittest

import numpy as np

from homcell import manifolds
from homcell.config import GrowthParams
from homcell.fixed_points import make_record
from homcell.manifolds import PLUS, UNSTABLE
from homcell.map_model import builtin_map
from homcell.tests import fixtures

TIMEOUT = 300
ENERGY_TOLERANCE = 1e-6
EQUIVARIANCE_TOLERANCE = 1e-5


class ManifoldFidelityTest(unittest.TestCase):
    def test_duffing_separatrix(self):
        start_time = time.time()
        f = builtin_map("duffing_time1", {}, (-2.0, 2.0, -2.0, 2.0))
        saddle = make_record(f, 1, np.zeros(2))
        growth = GrowthParams(h_max=0.0025, alpha_max=0.02, target_arclength=6.0)
        branch = manifolds.grow_manifolds(f, saddle, growth, keys=((UNSTABLE, PLUS),))[(UNSTABLE, PLUS)]
        elapsed = time.time() - start_time

        energy = np.abs(fixtures.duffing_energy(branch.points))
        if energy.max() >= ENERGY_TOLERANCE:
            worst = int(np.argmax(energy))
            raise AssertionError(
                f"Vertex {branch.points[worst].tolist()} at t={branch.params[worst]} has energy {energy[worst]}"
            )

        rng = np.random.default_rng(0)
        for t in rng.uniform(1.0, branch.params[-1] - 1.0, 100):
            defect = np.linalg.norm(f(manifolds.zeta(branch, t)) - manifolds.zeta(branch, t + 1.0))
            if defect >= EQUIVARIANCE_TOLERANCE:
                raise AssertionError(f"||f(zeta(t)) - zeta(t+1)|| = {defect} at t={t}")
        if elapsed > TIMEOUT:
            raise AssertionError(f"Expected growth to complete in under {TIMEOUT} seconds, but took {elapsed} seconds.")
