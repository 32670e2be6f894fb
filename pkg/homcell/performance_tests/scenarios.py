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


import dataclasses
import json
import math
import os
import tempfile
import time
import unittest

import numpy as np

from homcell import cli
from homcell.config import load_scenario
from homcell.pipeline import MATCH, Pipeline

DEFAULT_SCENARIOS = os.path.join(os.path.dirname(__file__), os.pardir, os.pardir, "scenarios")


class ScenarioPerformanceTest(unittest.TestCase):
    def get_config(self):
        config = {}
        # Gather env vars into dictionary.
        config["scenarios"] = os.getenv("SCENARIO_DIR") or DEFAULT_SCENARIOS
        config["seed_grid"] = os.getenv("SEED_GRID")
        config["timeout_scale"] = os.getenv("TIMEOUT_SCALE")

        # Type convert env vars.
        if config["seed_grid"]:
            config["seed_grid"] = int(config["seed_grid"])
        config["timeout_scale"] = float(config["timeout_scale"]) if config["timeout_scale"] else 1.0
        return config

    def run_scenario(self, config, name, timeout):
        scenario = load_scenario(os.path.join(config["scenarios"], name))
        if config["seed_grid"]:
            scenario.analysis = dataclasses.replace(scenario.analysis, seed_grid=config["seed_grid"])
        pipeline = Pipeline(scenario)
        start_time = time.time()
        report = pipeline.run()
        elapsed = time.time() - start_time
        limit = timeout * config["timeout_scale"]
        if elapsed > limit:
            raise AssertionError(f"Expected {name} to complete in under {limit} seconds, but took {elapsed} seconds.")
        return pipeline, report

    def test_duffing_theorem_a(self):
        config = self.get_config()
        pipeline, report = self.run_scenario(config, "duffing_lobe.json", 900)
        cell = pipeline.cell_search.cell
        self.assertEqual(cell.sign, "positive")
        self.assertEqual(cell.rho, 1)
        np.testing.assert_allclose(pipeline.cell_search.p_prime.location, [math.sqrt(2.0), 0.0], atol=1e-3)
        for n in range(1, 5):
            block = pipeline.blocks[n]
            if len(block.orbits) != 1:
                raise AssertionError(f"Expected one fixed point of f^{n} in V_{n}, got {len(block.orbits)}")
            np.testing.assert_allclose(block.orbits[0].location, [1.0, 0.0], atol=1e-8)
            self.assertEqual(block.block_index, 1)
            self.assertTrue(block.diagnostics["oracles_agree"])
        self.assertEqual(report.verdict, MATCH)

    def test_tangle(self):
        config = self.get_config()
        pipeline, report = self.run_scenario(config, "henon_tangle.json", 120)
        self.assertTrue(pipeline.cell_search.p_prime.transversal)
        cell = pipeline.cell_search.cell
        self.assertEqual(cell.rho, 1)
        for block in pipeline.blocks.values():
            agree = block.diagnostics.get("oracles_agree")
            if block.certified and agree is not None:
                # Both computations succeeded, so they must agree and give rho.
                self.assertTrue(agree, f"n={block.n}: {block.diagnostics}")
                self.assertEqual(block.block_index, cell.rho, f"n={block.n}: {block.diagnostics}")
            elif not block.diagnostics.get("errors"):
                raise AssertionError(f"n={block.n} is not certified but carries no diagnostics")
        self.assertEqual(report.verdict, MATCH)

    def test_tangle_scenario_exits_clean(self):
        config = self.get_config()
        path = os.path.join(config["scenarios"], "henon_tangle.json")
        with tempfile.TemporaryDirectory() as tmp:
            code = cli.run(path, out=tmp, quiet=True)
            self.assertEqual(code, cli.EXIT_OK)
            self.assertTrue(os.path.exists(os.path.join(tmp, "cell.svg")))
            with open(os.path.join(tmp, "report.json")) as f:
                document = json.load(f)
        self.assertEqual(document["verdict"], MATCH)

    def test_duffing_sphere(self):
        config = self.get_config()
        pipeline, report = self.run_scenario(config, "duffing_sphere.json", 600)
        results = {t.name: t.result for t in report.tasks}
        index = results["sphere_check"]["index"]
        self.assertEqual(index["total"], 2)
        self.assertEqual(index["total_by_winding"], 2)
        components = results["sphere_check"]["components"]
        self.assertEqual(sorted([components["inside"], components["outside"]]), [1, 2])
        self.assertEqual(components["saddle"], -1)
        self.assertEqual(components["total"], 2)
        lefschetz = results["lefschetz_check"]
        self.assertTrue(lefschetz["satisfied"])
        self.assertGreaterEqual(lefschetz["fixed_point_count"], abs(lefschetz["lefschetz"]) + 2)
        self.assertEqual(report.verdict, MATCH)

    def test_determinism(self):
        config = self.get_config()
        for name in sorted(os.listdir(config["scenarios"])):
            if name == "malformed.json":
                continue
            with self.subTest(name):
                documents = []
                codes = []
                for _ in range(2):
                    with tempfile.TemporaryDirectory() as tmp:
                        codes.append(cli.run(os.path.join(config["scenarios"], name), out=tmp, quiet=True))
                        path = os.path.join(tmp, "report.json")
                        if not os.path.exists(path):
                            documents.append(None)
                            continue
                        with open(path) as fh:
                            document = json.load(fh)
                    document.pop("timings")
                    documents.append(json.dumps(document, sort_keys=True))
                self.assertEqual(codes[0], codes[1])
                self.assertEqual(documents[0], documents[1])
