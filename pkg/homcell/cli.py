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

 Example execution:
 homcell run scenarios/duffing_lobe.json --out /tmp/duffing
 homcell zoo
 """

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from typing import Any, Optional

import jsonschema
import numpy as np

from homcell.config import load_scenario
from homcell.errors import (
    ChartInconsistency,
    ConfigError,
    ExpressionSyntaxError,
    HomcellError,
    HypothesisUnmet,
    UnknownFunctionError,
    UnknownIdentifierError,
)
from homcell.map_model import zoo_schema
from homcell.pipeline import MATCH, MISMATCH, Pipeline, RunReport
from homcell.render import render_cell, render_portrait, write_branch_csv

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3

_CONFIG_ERRORS = (ConfigError, ExpressionSyntaxError, UnknownFunctionError, UnknownIdentifierError)
# The scenario asked for something its map cannot provide.
_SCENARIO_ERRORS = _CONFIG_ERRORS + (HypothesisUnmet, ChartInconsistency)

SCHEMA_PATH = os.path.join(os.path.dirname(__file__), "schemas", "report.schema.json")


def parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="homcell")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the tasks of a scenario file")
    run.add_argument("config", type=str)
    run.add_argument("--out", type=str, default=None)
    run.add_argument("--seed-grid", type=int, default=None)
    run.add_argument("--quiet", action="store_true")
    sub.add_parser("zoo", help="print the parameter schema of the built-in maps")
    return parser.parse_args(argv)


def _finite(value: Any) -> Any:
    """Replaces non-finite floats with None so the report stays strict JSON."""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def load_report_schema() -> dict[str, Any]:
    with open(SCHEMA_PATH) as fh:
        return json.load(fh)


def report_document(report: RunReport) -> dict[str, Any]:
    """The validated report.json document."""
    document = _finite(report.to_json())
    jsonschema.validate(document, load_report_schema())
    return document


def write_artifacts(pipeline: Pipeline, report: RunReport, out: str) -> None:
    """Writes report.json, branches/*.csv, portrait.svg and cell.svg into out."""
    os.makedirs(out, exist_ok=True)
    document = report_document(report)
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if pipeline.branches:
        branch_dir = os.path.join(out, "branches")
        os.makedirs(branch_dir, exist_ok=True)
        for branch in pipeline.branches.values():
            write_branch_csv(os.path.join(branch_dir, f"{branch.name}.csv"), branch)
    cell = pipeline.cell_search.cell if pipeline.cell_search is not None else None
    if pipeline.branches or pipeline.fixed_points:
        svg = render_portrait(pipeline.branches.values(), cell, pipeline.fixed_points)
        with open(os.path.join(out, "portrait.svg"), "w") as fh:
            fh.write(svg)
    if cell is not None:
        with open(os.path.join(out, "cell.svg"), "w") as fh:
            fh.write(render_cell(cell))
    logging.info(f"Artifacts written to {out}")


def _summary(report: RunReport) -> None:
    for task in report.tasks:
        print(f"{task.name:<20} {task.verdict:<10} {task.seconds:8.3f}s")
        for block in task.result.get("blocks", []):
            print(
                f"  n={block['n']:<3} orbits={len(block['orbits']):<4} "
                f"index={block['block_index']} rho={block['rho']} match={block['match']}"
            )


def run(config: str, out: Optional[str] = None, seed_grid: Optional[int] = None, quiet: bool = False) -> int:
    """Runs one scenario file and returns the exit code.

    0 when every verification matched, 1 on a mismatch, 2 on a configuration
    error and 3 when the numerics could not certify a result.
    """
    try:
        scenario = load_scenario(config, out)
        if seed_grid is not None:
            scenario.analysis = dataclasses.replace(scenario.analysis, seed_grid=seed_grid)
            analysis = dict(scenario.raw.get("analysis", {}), seed_grid=seed_grid)
            scenario.raw = dict(scenario.raw, analysis=analysis)
        pipeline = Pipeline(scenario)
    except _CONFIG_ERRORS as e:
        logging.error(f"configuration error: {e}")
        return EXIT_CONFIG

    try:
        report = pipeline.run()
    except _SCENARIO_ERRORS as e:
        logging.error(f"configuration error in task {e.diagnostics.get('task')}: {e}")
        return EXIT_CONFIG
    except HomcellError as e:
        task = e.diagnostics.get("task")
        logging.error(f"task {task} failed: {e} {e.diagnostics}")
        return EXIT_CERTIFICATION

    write_artifacts(pipeline, report, scenario.output)
    if not quiet:
        _summary(report)
    if report.verdict == MATCH:
        return EXIT_OK
    if report.verdict == MISMATCH:
        return EXIT_MISMATCH
    return EXIT_CERTIFICATION


def main(argv: Optional[list[str]] = None) -> int:
    args = parse_args(argv)
    level = logging.WARNING if getattr(args, "quiet", False) else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "zoo":
        print(json.dumps(zoo_schema(), indent=2, sort_keys=True))
        return EXIT_OK
    return run(args.config, args.out, args.seed_grid, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
