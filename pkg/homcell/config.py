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

import dataclasses
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Optional

from homcell.errors import ConfigError

DEFAULT_RECT = (-10.0, 10.0, -10.0, 10.0)

TASKS = (
    "find_fixed_points",
    "grow_manifolds",
    "find_cell",
    "verify_theorem_a",
    "verify_theorem_a1",
    "sphere_check",
    "lefschetz_check",
)


@dataclass(frozen=True)
class Tolerances:
    """Numeric thresholds shared by all modules.

    Attributes:
        residual: Accepted ||f^n(x) - x|| for a periodic point.
        newton: Newton's terminal residual target.
        dedup: Two periodic points closer than this are the same point.
        imaginary: Eigenvalues with smaller imaginary part are treated as real.
        unit_circle: Band around |z| = 1 flagged as borderline hyperbolicity.
        fixed_point_on_curve: Smallest displacement allowed on an index curve.
        boundary_band: Half width of the polygon boundary band.
        tangency: |sin| of the crossing angle below which a crossing is tangential.
        polish: Bisection accuracy for homoclinic points.
        shadow: Allowed distance from f(vertex) to a grown branch.
        chart_consistency: Allowed disagreement between sphere charts.
        overlap: Distance under which two branches are treated as coincident.
        erosion: Inward offset of a cell polygon used for boundary winding.
    """

    residual: float = 1e-10
    newton: float = 1e-12
    dedup: float = 1e-6
    imaginary: float = 1e-9
    unit_circle: float = 1e-9
    fixed_point_on_curve: float = 1e-9
    boundary_band: float = 1e-9
    tangency: float = 1e-6
    polish: float = 1e-10
    shadow: float = 1e-6
    chart_consistency: float = 1e-8
    overlap: float = 1e-3
    erosion: float = 1e-4


@dataclass(frozen=True)
class GrowthParams:
    """Knobs for growing a manifold branch from its fundamental domain."""

    delta: float = 1e-6
    target_arclength: float = 6.0
    alpha_max: float = 0.2
    h_max: float = 0.05
    h_min: float = 1e-9
    max_iterations: int = 2000
    return_radius: float = 1e-3


@dataclass(frozen=True)
class AnalysisConfig:
    """Analysis block of a scenario; every field overrides a module default."""

    region: tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
    fixed_point_grid: int = 60
    seed_grid: int = 200
    n_max: int = 4
    a1_r: int = 2
    index_radius: float = 1e-3
    exclusion_radius: float = 1e-3
    homoclinic_index: int = 0
    saddle: Optional[tuple[float, float]] = None
    persistence_epsilons: tuple[float, ...] = ()
    growth: GrowthParams = field(default_factory=GrowthParams)
    tolerances: Tolerances = field(default_factory=Tolerances)


DEFAULT_TOLERANCES = Tolerances()
DEFAULT_GROWTH = GrowthParams()


@dataclass
class ScenarioConfig:
    """A parsed scenario document.

    Attributes:
        map_spec: The "map" block, or None for sphere scenarios.
        sphere_spec: The "sphere" block, or None for planar scenarios.
        analysis: Analysis settings with defaults filled in.
        tasks: Ordered task names.
        output: Output directory for report.json and the other artifacts.
        raw: The document as loaded, used for the config hash.
    """

    map_spec: Optional[dict[str, Any]]
    sphere_spec: Optional[dict[str, Any]]
    analysis: AnalysisConfig
    tasks: list[str]
    output: str
    raw: dict[str, Any]

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _check_keys(block: dict[str, Any], allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def real(name: str, value: Any) -> float:
    """Returns value as a float, or raises ConfigError unless it is a finite JSON number."""
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ConfigError(f"{name} must be a finite number, got {value!r}")
    return float(value)


def point(name: str, value: Any, size: int = 2) -> tuple[float, ...]:
    """Validates a JSON array of `size` finite numbers."""
    if not isinstance(value, (list, tuple)) or len(value) != size:
        raise ConfigError(f"{name} must be a list of {size} numbers, got {value!r}")
    return tuple(real(name, v) for v in value)


def rectangle(name: str, value: Any) -> tuple[float, float, float, float]:
    """Validates [xmin, xmax, ymin, ymax] with xmin < xmax and ymin < ymax."""
    rect = point(name, value, 4)
    if rect[0] >= rect[1] or rect[2] >= rect[3]:
        raise ConfigError(f"{name} must be [xmin, xmax, ymin, ymax], got {list(rect)}")
    return rect


def _positive(name: str, value: Any) -> float:
    if real(name, value) <= 0:
        raise ConfigError(f"{name} must be a positive number, got {value!r}")
    return value


def _positive_int(name: str, value: Any, minimum: int = 1) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def _object(name: str, value: Any) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"{name} must be a JSON object, got {value!r}")
    return dict(value)


def _build_dataclass(cls, block: Any, where: str):
    block = _object(where, block)
    names = {f.name for f in dataclasses.fields(cls)}
    _check_keys(block, names, where)
    for f in dataclasses.fields(cls):
        if f.name not in block:
            continue
        if f.type in (int, "int"):
            _positive_int(f"{where}.{f.name}", block[f.name])
        else:
            _positive(f"{where}.{f.name}", block[f.name])
    return cls(**block)


def parse_analysis(block: dict[str, Any]) -> AnalysisConfig:
    """Builds an AnalysisConfig from its JSON block, rejecting unknown keys.

    Args:
        block: The "analysis" object of a scenario document.

    Returns:
        The analysis configuration with module defaults for missing keys.
    """
    block = _object("analysis", block)
    names = {f.name for f in dataclasses.fields(AnalysisConfig)}
    _check_keys(block, names, "analysis")
    kwargs: dict[str, Any] = {}
    if "tolerances" in block:
        kwargs["tolerances"] = _build_dataclass(
            Tolerances, block.pop("tolerances"), "analysis.tolerances"
        )
    if "growth" in block:
        kwargs["growth"] = _build_dataclass(
            GrowthParams, block.pop("growth"), "analysis.growth"
        )
    if "region" in block:
        kwargs["region"] = rectangle("analysis.region", block.pop("region"))
    if "saddle" in block:
        saddle = block.pop("saddle")
        kwargs["saddle"] = None if saddle is None else point("analysis.saddle", saddle)
    if "persistence_epsilons" in block:
        eps = block.pop("persistence_epsilons")
        if not isinstance(eps, list):
            raise ConfigError(f"analysis.persistence_epsilons must be a list, got {eps!r}")
        kwargs["persistence_epsilons"] = tuple(
            _positive("analysis.persistence_epsilons", e) for e in eps
        )
    for key in ("fixed_point_grid", "seed_grid", "n_max", "a1_r"):
        if key in block:
            kwargs[key] = _positive_int(f"analysis.{key}", block.pop(key))
    if "homoclinic_index" in block:
        kwargs["homoclinic_index"] = _positive_int(
            "analysis.homoclinic_index", block.pop("homoclinic_index"), minimum=0
        )
    for key, value in block.items():
        kwargs[key] = _positive(f"analysis.{key}", value)
    return AnalysisConfig(**kwargs)


def parse_scenario(document: dict[str, Any], output: Optional[str] = None) -> ScenarioConfig:
    """Validates a scenario document.

    Args:
        document: The decoded JSON scenario.
        output: Output directory overriding the document's "output" key.

    Returns:
        The validated ScenarioConfig.
    """
    if not isinstance(document, dict):
        raise ConfigError("scenario must be a JSON object")
    _check_keys(document, {"map", "sphere", "analysis", "tasks", "output"}, "scenario")
    if ("map" in document) == ("sphere" in document):
        raise ConfigError('scenario needs exactly one of "map" or "sphere"')
    tasks = document.get("tasks", ["find_fixed_points"])
    if not isinstance(tasks, list) or not tasks:
        raise ConfigError("tasks must be a non-empty list")
    for task in tasks:
        if task not in TASKS:
            raise ConfigError(f"unknown task {task!r}; known tasks are {list(TASKS)}")
    if not isinstance(document.get("output", ""), str):
        raise ConfigError(f"output must be a path, got {document['output']!r}")
    return ScenarioConfig(
        map_spec=document.get("map"),
        sphere_spec=document.get("sphere"),
        analysis=parse_analysis(document.get("analysis", {})),
        tasks=list(tasks),
        output=output or document.get("output", "homcell-out"),
        raw=document,
    )


def load_scenario(path: str, output: Optional[str] = None) -> ScenarioConfig:
    """Loads and validates a scenario file.

    Malformed JSON is reported as a ConfigError carrying the byte offset.
    """
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read scenario: {e.strerror}")
    try:
        document = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path}: not UTF-8 text at byte offset {e.start}", offset=e.start)
    except json.JSONDecodeError as e:
        offset = len(e.doc[: e.pos].encode("utf-8"))
        raise ConfigError(
            f"{path}: {e.msg} at byte offset {offset} (line {e.lineno}, column {e.colno})",
            offset=offset,
        )
    logging.debug(f"Loaded scenario {path}")
    return parse_scenario(document, output)


def max_threads() -> int:
    """Returns the thread cap from HOMCELL_THREADS, defaulting to the CPU count."""
    value = os.getenv("HOMCELL_THREADS")
    if value:
        try:
            threads = int(value)
        except ValueError:
            raise ConfigError(f"HOMCELL_THREADS must be an integer, got {value!r}")
        return max(1, threads)
    return max(1, min(8, os.cpu_count() or 1))
