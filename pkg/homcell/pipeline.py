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

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from homcell import __version__
from homcell.config import ScenarioConfig
from homcell.errors import ConfigError, HomcellError, HypothesisUnmet, NoHomoclinicPoint
from homcell.fixed_points import (
    FixedPointRecord,
    SearchStats,
    grid_points,
    nearest,
    periodic_point_search,
    saddles,
)
from homcell.homoclinic import CellSearch, find_cell
from homcell.index import try_index_at_point
from homcell.manifolds import ManifoldBranch, grow_manifolds, shadow_defect
from homcell.map_model import SmoothPlanarMap, check_invariants, map_from_spec
from homcell.periodic_cell import (
    MAX_A1_R,
    MAX_N,
    MIN_BLOCK_GRID,
    BlockReport,
    verify_all_saddles,
    verify_dissipative,
    verify_persistence,
    verify_theorem_a,
    verify_theorem_a1,
)
from homcell.sphere import (
    NORTH,
    SphereIndexReport,
    SphereMap,
    component_indices,
    homoclinic_obstruction,
    lefschetz_bound_check,
    no_cell_certificate,
    sphere_from_spec,
    sphere_index_report,
    three_fixed_points_check,
)

# Verdicts, ordered by precedence when folded into one exit status.
MATCH = "match"
UNCERTAIN = "uncertain"
MISMATCH = "mismatch"

_PREREQUISITES = {
    "find_fixed_points": (),
    "grow_manifolds": ("find_fixed_points",),
    "find_cell": ("grow_manifolds",),
    "verify_theorem_a": ("find_cell",),
    "verify_theorem_a1": ("find_cell",),
    "sphere_check": ("find_fixed_points",),
    "lefschetz_check": ("find_fixed_points",),
}

SHADOW_SAMPLES = 64
INVARIANT_GRID = 5


@dataclass
class TaskResult:
    name: str
    verdict: str
    seconds: float
    result: dict[str, Any]


@dataclass
class RunReport:
    """Everything one scenario run produced.

    Attributes:
        tasks: Results in the order the tasks ran.
        config_hash: sha256 of the canonical scenario document.
        version: homcell version that produced the report.
    """

    tasks: list[TaskResult]
    config_hash: str
    version: str = __version__

    @property
    def verdict(self) -> str:
        return _fold(t.verdict for t in self.tasks)

    def to_json(self) -> dict[str, Any]:
        """The report.json document; timings live under "timings" only."""
        return {
            "version": self.version,
            "config_hash": self.config_hash,
            "verdict": self.verdict,
            "tasks": [{"name": t.name, "verdict": t.verdict, "result": t.result} for t in self.tasks],
            "timings": {t.name: round(t.seconds, 6) for t in self.tasks},
        }


def _verdict(ok: Optional[bool]) -> str:
    if ok is None:
        return UNCERTAIN
    return MATCH if ok else MISMATCH


@dataclass
class Pipeline:
    """Runs the tasks of one scenario in order, sharing intermediate results.

    A task whose inputs come from an earlier task runs that task first when
    the scenario did not list it.
    """

    scenario: ScenarioConfig
    f: Optional[SmoothPlanarMap] = None
    sphere: Optional[SphereMap] = None
    fixed_points: list[FixedPointRecord] = field(default_factory=list)
    search_stats: Optional[SearchStats] = None
    saddle: Optional[FixedPointRecord] = None
    branches: dict[tuple[str, str], ManifoldBranch] = field(default_factory=dict)
    cell_search: Optional[CellSearch] = None
    blocks: dict[int, BlockReport] = field(default_factory=dict)
    sphere_report: Optional[SphereIndexReport] = None
    results: list[TaskResult] = field(default_factory=list)

    def __post_init__(self):
        a = self.scenario.analysis
        if a.fixed_point_grid < 2:
            raise ConfigError(f"analysis.fixed_point_grid must be at least 2, got {a.fixed_point_grid}")
        if a.seed_grid < MIN_BLOCK_GRID:
            raise ConfigError(f"analysis.seed_grid must be at least {MIN_BLOCK_GRID}, got {a.seed_grid}")
        if a.n_max > MAX_N:
            raise ConfigError(f"analysis.n_max must be at most {MAX_N}, got {a.n_max}")
        if a.a1_r > MAX_A1_R:
            raise ConfigError(f"analysis.a1_r must be at most {MAX_A1_R}, got {a.a1_r}")
        if "sphere_check" in self.scenario.tasks and self.scenario.sphere_spec is None:
            raise ConfigError('task "sphere_check" needs a "sphere" scenario')
        if self.scenario.sphere_spec is not None:
            self.sphere = sphere_from_spec(self.scenario.sphere_spec)
            # The planar tasks work in the z chart.
            self.f = self.sphere.north
        else:
            self.f = map_from_spec(self.scenario.map_spec)
        self._done: set[str] = set()

    @property
    def analysis(self):
        return self.scenario.analysis

    def run(self) -> RunReport:
        for task in self.scenario.tasks:
            self._run_task(task)
        return RunReport(self.results, self.scenario.config_hash())

    def _run_task(self, task: str) -> None:
        if task in self._done:
            return
        for dependency in _PREREQUISITES[task]:
            self._run_task(dependency)
        logging.info(f"Running task {task}")
        start = time.monotonic()
        try:
            verdict, result = getattr(self, f"_task_{task}")()
        except HomcellError as e:
            e.diagnostics.setdefault("task", task)
            raise
        seconds = time.monotonic() - start
        logging.info(f"Task {task} finished in {seconds:.3f}s with verdict {verdict}")
        self.results.append(TaskResult(task, verdict, seconds, result))
        self._done.add(task)

    def _task_find_fixed_points(self):
        a = self.analysis
        records, stats = periodic_point_search(self.f, 1, a.region, a.fixed_point_grid, a.tolerances)
        errors = {}
        for rec in records:
            rec.index, error = try_index_at_point(
                self.f, 1, rec.location, radius=a.index_radius, tolerances=a.tolerances
            )
            if error is not None:
                errors[f"{rec.location[0]:.12g},{rec.location[1]:.12g}"] = error
        self.fixed_points, self.search_stats = records, stats
        invariants = check_invariants(self.f, grid_points(a.region, INVARIANT_GRID))
        if not invariants.orientation_preserving:
            logging.warning(f"map reverses orientation somewhere in the region (min det {invariants.min_det:.3g})")
        result = {
            "fixed_points": [r.to_json() for r in records],
            "search": stats.to_json(),
            "index_errors": errors,
            "orientation_preserving": invariants.orientation_preserving,
            "min_det": invariants.min_det,
        }
        return (UNCERTAIN if errors else MATCH), result

    def _pick_saddle(self) -> FixedPointRecord:
        candidates = saddles(self.fixed_points)
        if self.analysis.saddle is not None:
            candidates = [nearest(candidates, self.analysis.saddle)] if candidates else []
        if not candidates:
            raise NoHomoclinicPoint("no homoclinic point found: the map has no saddle fixed point in the region")
        return candidates[0]

    def _task_grow_manifolds(self):
        self.saddle = self._pick_saddle()
        self.branches = grow_manifolds(self.f, self.saddle, self.analysis.growth)
        summary = {}
        for branch in self.branches.values():
            summary[branch.name] = {
                "vertices": int(len(branch.points)),
                "arclength": branch.arclength,
                "t_max": float(branch.params[-1]),
                "stop_reason": branch.stop_reason,
                "iterate": branch.iterate,
                "shadow_defect": shadow_defect(self.f, branch, SHADOW_SAMPLES),
            }
        return MATCH, {"saddle": self.saddle.to_json(), "branches": summary}

    def _task_find_cell(self):
        a = self.analysis
        self.cell_search = find_cell(
            self.branches, a.tolerances, a.exclusion_radius, a.homoclinic_index, self.f
        )
        return MATCH, self.cell_search.to_json()

    def _task_verify_theorem_a(self):
        a = self.analysis
        cell = self.cell_search.cell
        reports = verify_theorem_a(self.f, cell, a.n_max, a.seed_grid, a.tolerances, a.index_radius)
        self.blocks = {r.n: r for r in reports}
        verdicts = [_verdict(r.match if r.certified else None) for r in reports]
        result: dict[str, Any] = {"rho": cell.rho, "blocks": [r.to_json() for r in reports]}
        if a.persistence_epsilons:
            persistence = verify_persistence(self.f, cell, a.persistence_epsilons, tolerances=a.tolerances)
            result["persistence"] = persistence
            verdicts.extend(_verdict(row["stable"] if row["certified"] else None) for row in persistence)
        return _fold(verdicts), result

    def _task_verify_theorem_a1(self):
        a = self.analysis
        cell = self.cell_search.cell
        report = verify_theorem_a1(self.f, cell, a.a1_r, a.seed_grid, a.tolerances, self.blocks)
        saddles_only = verify_all_saddles(report)
        dissipative = verify_dissipative(self.f, cell, report)
        result = {
            "a1": report.to_json(),
            "all_saddles": saddles_only,
            "dissipative": dissipative,
        }
        # A void hypothesis is a finding, not a failure.
        holds = report.holds
        verdicts = [MATCH if holds is None else _verdict(holds), _verdict(saddles_only["holds"])]
        if dissipative["holds"] is not None:
            verdicts.append(_verdict(dissipative["holds"]))
        return _fold(verdicts), result

    def _task_sphere_check(self):
        a = self.analysis
        self.sphere_report = sphere_index_report(self.sphere, a.fixed_point_grid, a.tolerances)
        report = self.sphere_report
        has_loop = self.cell_search is not None
        result: dict[str, Any] = {
            "index": report.to_json(),
            "three_fixed_points": three_fixed_points_check(report, has_loop),
        }
        verdicts = [_verdict(report.total == 2 if report.consistent else None)]
        if has_loop:
            components = component_indices(self.sphere, self.cell_search.loop, a.tolerances)
            result["components"] = components.to_json()
            verdicts.append(_verdict(components.is_one_two))
            verdicts.append(_verdict(result["three_fixed_points"]["holds"]))
            if report.total is not None:
                saddle = self.cell_search.loop.saddle.location
                others = [
                    fp.record.index for fp in report.fixed_points
                    if not (fp.chart == NORTH and np.linalg.norm(fp.record.location - saddle) <= a.tolerances.dedup)
                ]
                obstruction = homoclinic_obstruction(others)
                result["obstruction"] = obstruction
                verdicts.append(_verdict(obstruction["compatible"]))
        return _fold(verdicts), result

    def _task_lefschetz_check(self):
        if self.sphere is not None:
            if self.sphere_report is None:
                self._run_task("sphere_check")
            points, lefschetz = self.sphere_report.fixed_points, self.sphere_report.total
        else:
            points, lefschetz = self.fixed_points, None
        try:
            if self.cell_search is not None:
                report = lefschetz_bound_check(points, self.cell_search.cell, lefschetz)
                return _verdict(report.satisfied), report.to_json()
            certificate = no_cell_certificate(points, lefschetz)
            return MATCH, {"no_cell": certificate}
        except HypothesisUnmet as e:
            logging.warning(f"Lefschetz bound not applicable: {e}")
            return UNCERTAIN, {"not_applicable": str(e)}


def _fold(verdicts) -> str:
    verdicts = set(verdicts)
    for v in (MISMATCH, UNCERTAIN):
        if v in verdicts:
            return v
    return MATCH


def run_scenario(scenario: ScenarioConfig) -> RunReport:
    """Runs every task of a parsed scenario and returns the report."""
    return Pipeline(scenario).run()
