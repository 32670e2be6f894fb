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


import contextlib
import io
import json
import math
import os
import tempfile
import unittest

import jsonschema
import numpy as np

from homcell import cli
from homcell.pipeline import MATCH, MISMATCH, UNCERTAIN, RunReport, TaskResult

SCENARIOS = os.path.join(os.path.dirname(__file__), os.pardir, os.pardir, "scenarios")
LINEAR = {"kind": "builtin", "name": "linear_saddle", "params": {"lambda": 0.5, "mu": 2.0}}


def scenario_path(name: str) -> str:
    return os.path.join(SCENARIOS, name)


class ParseArgsTest(unittest.TestCase):
    def test_run(self):
        args = cli.parse_args(["run", "a.json", "--out", "o", "--seed-grid", "50", "--quiet"])
        self.assertEqual((args.command, args.config, args.out, args.seed_grid, args.quiet),
                         ("run", "a.json", "o", 50, True))

    def test_defaults(self):
        args = cli.parse_args(["run", "a.json"])
        self.assertIsNone(args.out)
        self.assertIsNone(args.seed_grid)
        self.assertFalse(args.quiet)

    def test_command_required(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                cli.parse_args([])


class ReportTest(unittest.TestCase):
    def test_finite(self):
        value = {"a": np.float64("nan"), "b": [1.0, math.inf, np.int64(3)], "c": (np.float32(0.5), "x")}
        self.assertEqual(cli._finite(value), {"a": None, "b": [1.0, None, 3], "c": [0.5, "x"]})

    def test_verdict_precedence(self):
        test_cases = [
            {"desc": "all match", "verdicts": [MATCH, MATCH], "want": MATCH},
            {"desc": "uncertain beats match", "verdicts": [MATCH, UNCERTAIN], "want": UNCERTAIN},
            {"desc": "mismatch beats everything", "verdicts": [UNCERTAIN, MISMATCH, MATCH], "want": MISMATCH},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                tasks = [TaskResult(f"task{i}", v, 0.0, {}) for i, v in enumerate(tc["verdicts"])]
                self.assertEqual(RunReport(tasks, "0" * 64).verdict, tc["want"])

    def test_schema_rejects_unknown_keys(self):
        document = cli._finite(RunReport([TaskResult("find_fixed_points", MATCH, 0.1, {})], "0" * 64).to_json())
        jsonschema.validate(document, cli.load_report_schema())
        document["extra"] = 1
        with self.assertRaises(jsonschema.ValidationError):
            jsonschema.validate(document, cli.load_report_schema())


class RunTest(unittest.TestCase):
    def _scenario(self, tmp: str, document: dict) -> str:
        path = os.path.join(tmp, "scenario.json")
        with open(path, "w") as fh:
            json.dump(document, fh)
        return path

    def test_linear_saddle(self):
        with tempfile.TemporaryDirectory() as tmp:
            code = cli.run(scenario_path("linear_saddle.json"), out=tmp, quiet=True)
            self.assertEqual(code, cli.EXIT_OK)
            with open(os.path.join(tmp, "report.json")) as fh:
                report = json.load(fh)
            self.assertTrue(os.path.exists(os.path.join(tmp, "portrait.svg")))
            self.assertFalse(os.path.exists(os.path.join(tmp, "cell.svg")))
        jsonschema.validate(report, cli.load_report_schema())
        self.assertEqual(report["verdict"], MATCH)
        self.assertEqual([t["name"] for t in report["tasks"]], ["find_fixed_points", "lefschetz_check"])
        self.assertEqual(set(report["timings"]), {"find_fixed_points", "lefschetz_check"})
        fixed_points = report["tasks"][0]["result"]["fixed_points"]
        self.assertEqual(len(fixed_points), 1)
        self.assertEqual((fixed_points[0]["class"], fixed_points[0]["index"]), ("direct_saddle", -1))
        self.assertTrue(report["tasks"][1]["result"]["no_cell"]["no_homoclinic_cell"])

    def test_seed_grid_changes_the_config_hash(self):
        hashes = []
        for seed_grid in (None, 40):
            with tempfile.TemporaryDirectory() as tmp:
                cli.run(scenario_path("linear_saddle.json"), out=tmp, seed_grid=seed_grid, quiet=True)
                with open(os.path.join(tmp, "report.json")) as fh:
                    hashes.append(json.load(fh)["config_hash"])
        self.assertNotEqual(hashes[0], hashes[1])

    def test_exit_codes(self):
        test_cases = [
            {"desc": "malformed json", "path": scenario_path("malformed.json"), "want": cli.EXIT_CONFIG},
            {"desc": "no homoclinic point", "path": scenario_path("no_homoclinic.json"),
             "want": cli.EXIT_CERTIFICATION},
            {"desc": "missing file", "document": None, "want": cli.EXIT_CONFIG},
            {"desc": "sphere check on a planar map",
             "document": {"map": LINEAR, "tasks": ["sphere_check"]}, "want": cli.EXIT_CONFIG},
            {"desc": "unknown function",
             "document": {"map": {"kind": "expression", "fx": "foo(x)", "fy": "y"}}, "want": cli.EXIT_CONFIG},
            {"desc": "coarse seed grid",
             "document": {"map": LINEAR, "analysis": {"seed_grid": 5}}, "want": cli.EXIT_CONFIG},
            {"desc": "n_max too large",
             "document": {"map": LINEAR, "analysis": {"n_max": 17}}, "want": cli.EXIT_CONFIG},
            {"desc": "text in saddle",
             "document": {"map": LINEAR, "analysis": {"saddle": ["a", 0]}}, "want": cli.EXIT_CONFIG},
            {"desc": "short region",
             "document": {"map": LINEAR, "analysis": {"region": [0, 1]}}, "want": cli.EXIT_CONFIG},
            {"desc": "text in map rect",
             "document": {"map": dict(LINEAR, rect=["a", 1, 0, 1])}, "want": cli.EXIT_CONFIG},
            {"desc": "scalar map rect",
             "document": {"map": dict(LINEAR, rect=3)}, "want": cli.EXIT_CONFIG},
            {"desc": "params not an object",
             "document": {"map": dict(LINEAR, params=[0.5, 2.0])}, "want": cli.EXIT_CONFIG},
            {"desc": "text parameter",
             "document": {"map": dict(LINEAR, params={"lambda": "half", "mu": 2.0})}, "want": cli.EXIT_CONFIG},
            {"desc": "map name not text",
             "document": {"map": {"kind": "builtin", "name": ["henon"]}}, "want": cli.EXIT_CONFIG},
            {"desc": "text ode horizon",
             "document": {"map": {"kind": "ode", "fx": "y", "fy": "x", "T": "1"}}, "want": cli.EXIT_CONFIG},
        ]
        for tc in test_cases:
            with self.subTest(tc["desc"]):
                with tempfile.TemporaryDirectory() as tmp:
                    if "path" in tc:
                        path = tc["path"]
                    elif tc["document"] is None:
                        path = os.path.join(tmp, "absent.json")
                    else:
                        path = self._scenario(tmp, tc["document"])
                    out = os.path.join(tmp, "out")
                    self.assertEqual(cli.run(path, out=out, quiet=True), tc["want"])
                    self.assertFalse(os.path.exists(os.path.join(out, "report.json")))


class MainTest(unittest.TestCase):
    def test_zoo(self):
        stdout = io.StringIO()
        with contextlib.redirect_stdout(stdout):
            code = cli.main(["zoo"])
        self.assertEqual(code, cli.EXIT_OK)
        zoo = json.loads(stdout.getvalue())
        self.assertIn("henon", zoo)
        self.assertIn("duffing_time1", zoo)

    def test_run_prints_summary(self):
        stdout = io.StringIO()
        with tempfile.TemporaryDirectory() as tmp, contextlib.redirect_stdout(stdout):
            code = cli.main(["run", scenario_path("linear_saddle.json"), "--out", tmp])
        self.assertEqual(code, cli.EXIT_OK)
        self.assertIn("find_fixed_points", stdout.getvalue())
        self.assertIn("lefschetz_check", stdout.getvalue())


if __name__ == "__main__":
    unittest.main()
