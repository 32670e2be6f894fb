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

 Maps of the 2-sphere given in two stereographic charts, and the index checks on them.
 """

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from homcell import geometry
from homcell.config import DEFAULT_TOLERANCES, Tolerances, real
from homcell.errors import ChartInconsistency, ConfigError, HomcellError, HypothesisUnmet, NotIsolated
from homcell.fixed_points import FixedPointRecord, find_periodic_points
from homcell.geometry import OrientedPolygon
from homcell.homoclinic import HomoclinicCell, HomoclinicLoop
from homcell.index import index_along_curve, index_at_point
from homcell.map_model import SmoothPlanarMap, map_from_spec

NORTH = "north"
SOUTH = "south"
SPLIT_CIRCLE_SEGMENTS = 128


def to_other_chart(points) -> np.ndarray:
    """The chart transition w = 1/z, i.e. (x, -y) / (x^2 + y^2); it is its own inverse."""
    p = np.asarray(points, dtype=float)
    r2 = np.sum(p * p, axis=-1, keepdims=True)
    return np.concatenate([p[..., :1], -p[..., 1:]], axis=-1) / r2


@dataclass(frozen=True)
class SphereMap:
    """An orientation-preserving map of the sphere in the charts z and w = 1/z.

    Attributes:
        north: The map in the z chart.
        south: The map in the w chart.
        r_in: Inner radius of the overlap annulus, in the z chart.
        r_out: Outer radius of the overlap annulus, in the z chart.
        tolerance: Allowed disagreement of the charts on the annulus.
    """

    north: SmoothPlanarMap
    south: SmoothPlanarMap
    r_in: float = 2.0
    r_out: float = 4.0
    tolerance: float = DEFAULT_TOLERANCES.chart_consistency

    def __post_init__(self):
        if not 0 < self.r_in < self.r_out:
            raise ValueError(f"need 0 < r_in < r_out, got {self.r_in}, {self.r_out}")

    @property
    def split_radius(self) -> float:
        """The z chart covers |z| <= split_radius, the w chart the rest."""
        return math.sqrt(self.r_in * self.r_out)


def sphere_from_spec(spec: Mapping[str, Any]) -> SphereMap:
    """Builds a SphereMap from {"north": <map>, "south": <map>, "r_in", "r_out"}."""
    if not isinstance(spec, Mapping):
        raise ConfigError("sphere spec must be a JSON object")
    unknown = set(spec) - {"north", "south", "r_in", "r_out", "tolerance"}
    if unknown:
        raise ConfigError(f"unknown keys in sphere spec: {sorted(unknown)}")
    for key in ("north", "south"):
        if key not in spec:
            raise ConfigError(f'sphere spec needs "{key}"')
    r_in = real("sphere r_in", spec.get("r_in", 2.0))
    r_out = real("sphere r_out", spec.get("r_out", 4.0))
    if not 0 < r_in < r_out:
        raise ConfigError(f"sphere spec needs 0 < r_in < r_out, got {r_in}, {r_out}")
    return SphereMap(
        map_from_spec(spec["north"]),
        map_from_spec(spec["south"]),
        r_in,
        r_out,
        real("sphere tolerance", spec.get("tolerance", DEFAULT_TOLERANCES.chart_consistency)),
    )


def chart_consistency(g: SphereMap, samples: int = 64) -> float:
    """Largest |south(w(z)) - w(north(z))| over circles in the overlap annulus.

    Raises:
        ChartInconsistency: the disagreement exceeds g.tolerance.
    """
    theta = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    directions = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    worst = 0.0
    for r in np.linspace(g.r_in, g.r_out, 3):
        z = r * directions
        via_north = to_other_chart(g.north.map_many(z))
        via_south = g.south.map_many(to_other_chart(z))
        worst = max(worst, float(np.max(np.linalg.norm(via_north - via_south, axis=1))))
    if worst > g.tolerance:
        raise ChartInconsistency(
            f"charts disagree by {worst:.3e} on the overlap annulus (tolerance {g.tolerance:g})",
            disagreement=worst,
        )
    return worst


@dataclass
class SphereFixedPoint:
    chart: str
    record: FixedPointRecord

    def to_json(self) -> dict[str, Any]:
        out = self.record.to_json()
        out["chart"] = self.chart
        return out


@dataclass
class SphereIndexReport:
    """Fixed points of a sphere map and two readings of the total index.

    Attributes:
        fixed_points: Fixed points, each in the chart whose disc contains it.
        total: Sum of the point indices.
        total_by_winding: Winding along the split circle in the z chart plus
            winding along its image circle in the w chart.
        chart_disagreement: Largest chart mismatch on the annulus.
    """

    fixed_points: list[SphereFixedPoint]
    total: Optional[int]
    total_by_winding: Optional[int]
    north_winding: Optional[int] = None
    south_winding: Optional[int] = None
    chart_disagreement: float = 0.0
    errors: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.total is not None and self.total == self.total_by_winding

    def indices(self) -> list[Optional[int]]:
        return [fp.record.index for fp in self.fixed_points]

    def to_json(self) -> dict[str, Any]:
        return {
            "fixed_points": [fp.to_json() for fp in self.fixed_points],
            "total": self.total,
            "total_by_winding": self.total_by_winding,
            "north_winding": self.north_winding,
            "south_winding": self.south_winding,
            "chart_disagreement": self.chart_disagreement,
            "consistent": self.consistent,
            "errors": self.errors,
        }


def _chart_fixed_points(chart: SmoothPlanarMap, radius: float, grid: int, tolerances: Tolerances):
    square = (-radius, radius, -radius, radius)
    records = find_periodic_points(chart, 1, square, grid, tolerances)
    return [r for r in records if np.linalg.norm(r.location) <= radius]


def sphere_index_report(
    g: SphereMap, grid: int = 60, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> SphereIndexReport:
    """Locates and indexes the fixed points of g in both charts.

    Points in the overlap annulus are indexed in both charts; differing
    values raise ChartInconsistency.
    """
    disagreement = chart_consistency(g)
    rho = g.split_radius
    north = _chart_fixed_points(g.north, rho, grid, tolerances)
    south = [
        r for r in _chart_fixed_points(g.south, 1.0 / rho, grid, tolerances)
        if np.linalg.norm(r.location) < 1.0 / rho
    ]
    points = [SphereFixedPoint(NORTH, r) for r in north] + [SphereFixedPoint(SOUTH, r) for r in south]
    errors = []
    for fp in points:
        chart = g.north if fp.chart == NORTH else g.south
        try:
            fp.record.index = index_at_point(chart, 1, fp.record.location, tolerances=tolerances)
        except HomcellError as e:
            errors.append(str(e))
            continue
        z = fp.record.location if fp.chart == NORTH else to_other_chart(fp.record.location)
        if g.r_in <= np.linalg.norm(z) <= g.r_out:
            other, there = (g.south, to_other_chart(z)) if fp.chart == NORTH else (g.north, z)
            twin = index_at_point(other, 1, there, tolerances=tolerances)
            if twin != fp.record.index:
                raise ChartInconsistency(
                    f"fixed point {z.tolist()} has index {fp.record.index} in one chart and {twin} in the other"
                )
    total = None if errors else int(sum(fp.record.index for fp in points))

    north_winding = south_winding = None
    try:
        north_winding = index_along_curve(
            g.north, OrientedPolygon.circle((0.0, 0.0), rho, SPLIT_CIRCLE_SEGMENTS), 1, tolerances
        ).degree
        south_winding = index_along_curve(
            g.south, OrientedPolygon.circle((0.0, 0.0), 1.0 / rho, SPLIT_CIRCLE_SEGMENTS), 1, tolerances
        ).degree
    except HomcellError as e:
        errors.append(f"split circle winding: {e}")
    by_winding = (
        None if north_winding is None or south_winding is None else north_winding + south_winding
    )
    logging.info(f"sphere total index {total}, by winding {by_winding}, {len(points)} fixed points")
    return SphereIndexReport(points, total, by_winding, north_winding, south_winding, disagreement, errors)


def total_index(g: SphereMap, grid: int = 60, tolerances: Tolerances = DEFAULT_TOLERANCES) -> int:
    """Sum of the fixed point indices of g over the whole sphere.

    Raises:
        NotIsolated: some fixed point index cannot be certified.
        ChartInconsistency: the charts disagree.
    """
    report = sphere_index_report(g, grid, tolerances)
    if report.total is None:
        raise NotIsolated(
            f"fixed point indices on the sphere could not be certified: {'; '.join(report.errors)}",
            errors=report.errors,
        )
    return report.total


@dataclass
class ComponentIndices:
    """Indices of g over the two complementary components of a loop.

    Attributes:
        inside: Index over the bounded component in the z chart.
        outside: Index over the component containing infinity.
        saddle: Index at the saddle, read off between the two offset curves.
    """

    inside: int
    outside: int
    saddle: int

    @property
    def pair(self) -> tuple[int, int]:
        return self.inside, self.outside

    @property
    def is_one_two(self) -> bool:
        return sorted(self.pair) == [1, 2]

    @property
    def total(self) -> int:
        return self.inside + self.outside + self.saddle

    def to_json(self) -> dict[str, Any]:
        return {
            "inside": self.inside,
            "outside": self.outside,
            "saddle": self.saddle,
            "one_and_two": self.is_one_two,
            "total": self.total,
        }


def component_indices(
    g: SphereMap, loop: HomoclinicLoop, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> ComponentIndices:
    """Index of g over each complementary component of a simple loop drawn in the z chart.

    The bounded component is read by winding along the loop polygon eroded by
    tolerances.erosion. The other component is the split circle winding minus
    the winding along the dilated polygon, plus the w chart winding, so that
    the point at infinity is handled in the w chart.

    Raises:
        HypothesisUnmet: the loop is not simple or does not fit inside the z chart disc.
    """
    if not loop.simple:
        raise HypothesisUnmet("component indices need a simple homoclinic loop")
    polygon = OrientedPolygon.from_vertices(geometry.drop_duplicates(loop.polygon_vertices())).counterclockwise()
    rho = g.split_radius
    if np.max(np.linalg.norm(polygon.vertices, axis=1)) + tolerances.erosion >= rho:
        raise HypothesisUnmet(f"loop leaves the z chart disc of radius {rho:.4g}")
    eroded = OrientedPolygon.from_vertices(geometry.offset_polygon(polygon.vertices, -tolerances.erosion))
    dilated = OrientedPolygon.from_vertices(geometry.offset_polygon(polygon.vertices, tolerances.erosion))
    w_eroded = index_along_curve(g.north, eroded.counterclockwise(), 1, tolerances).degree
    w_dilated = index_along_curve(g.north, dilated.counterclockwise(), 1, tolerances).degree
    w_split = index_along_curve(
        g.north, OrientedPolygon.circle((0.0, 0.0), rho, SPLIT_CIRCLE_SEGMENTS), 1, tolerances
    ).degree
    w_south = index_along_curve(
        g.south, OrientedPolygon.circle((0.0, 0.0), 1.0 / rho, SPLIT_CIRCLE_SEGMENTS), 1, tolerances
    ).degree
    result = ComponentIndices(w_eroded, w_split - w_dilated + w_south, w_dilated - w_eroded)
    logging.info(f"component indices {result.pair}, saddle {result.saddle}")
    return result


@dataclass
class LefschetzReport:
    """Counting bounds for a map with a homoclinic cell.

    Attributes:
        fixed_point_count: Number of fixed points found.
        lefschetz: Lefschetz number, taken as the total index.
        rho: rho of the cell.
        bound: |Lef + 1 - rho| + 1 + rho.
        weak_bound: |Lef| + 2.
    """

    fixed_point_count: int
    lefschetz: int
    rho: int
    bound: int
    weak_bound: int

    @property
    def satisfied(self) -> bool:
        return self.fixed_point_count >= self.bound

    @property
    def chain_holds(self) -> bool:
        return self.bound >= self.weak_bound

    def to_json(self) -> dict[str, Any]:
        return {
            "fixed_point_count": self.fixed_point_count,
            "lefschetz": self.lefschetz,
            "rho": self.rho,
            "bound": self.bound,
            "weak_bound": self.weak_bound,
            "satisfied": self.satisfied,
            "chain_holds": self.chain_holds,
            "diagnostic": None if self.satisfied else "fixed point search looks incomplete",
        }


def _indices_of(fixed_points: Sequence) -> list[int]:
    out = []
    for fp in fixed_points:
        record = fp.record if isinstance(fp, SphereFixedPoint) else fp
        index = record.index if isinstance(record, FixedPointRecord) else record
        if index is None:
            raise HypothesisUnmet("every fixed point needs a certified index")
        out.append(int(index))
    return out


def lefschetz_bound_check(
    fixed_points: Sequence,
    cell: HomoclinicCell | int,
    lefschetz: Optional[int] = None,
) -> LefschetzReport:
    """Evaluates #Fix >= |Lef + 1 - rho| + 1 + rho >= |Lef| + 2.

    Args:
        fixed_points: Records (or SphereFixedPoints, or bare indices) of every fixed point.
        cell: The homoclinic cell, or its rho.
        lefschetz: Defaults to the sum of the indices.

    Raises:
        HypothesisUnmet: some index is outside {-1, 0, 1}.
    """
    indices = _indices_of(fixed_points)
    bad = [i for i in indices if i not in (-1, 0, 1)]
    if bad:
        raise HypothesisUnmet(f"fixed point indices {bad} are outside {{-1, 0, 1}}")
    rho = cell if isinstance(cell, int) else cell.rho
    lef = sum(indices) if lefschetz is None else lefschetz
    bound = abs(lef + 1 - rho) + 1 + rho
    return LefschetzReport(len(indices), lef, rho, bound, abs(lef) + 2)


def no_cell_certificate(fixed_points: Sequence, lefschetz: Optional[int] = None) -> dict[str, Any]:
    """With every index in {-1, 0, 1}, #Fix <= |Lef| + 1 rules out homoclinic cells."""
    indices = _indices_of(fixed_points)
    hypothesis = all(i in (-1, 0, 1) for i in indices)
    lef = sum(indices) if lefschetz is None else lefschetz
    certified = hypothesis and len(indices) <= abs(lef) + 1
    return {
        "fixed_point_count": len(indices),
        "lefschetz": lef,
        "hypothesis": hypothesis,
        "no_homoclinic_cell": certified,
    }


def homoclinic_obstruction(other_indices: Sequence[int], total: int = 2) -> dict[str, Any]:
    """Whether a direct saddle with these other fixed point indices can carry a simple loop on the sphere.

    The two components of the loop must carry indices 1 and 2, so the other
    indices must split into groups summing to 1 and 2.
    """
    others = [int(i) for i in other_indices]
    if sum(others) - 1 != total:
        return {
            "compatible": False,
            "reason": f"indices sum to {sum(others) - 1} with the saddle, not {total}",
            "split": None,
        }
    for size in range(len(others) + 1):
        for group in itertools.combinations(range(len(others)), size):
            if sum(others[k] for k in group) == 1:
                rest = [others[k] for k in range(len(others)) if k not in group]
                return {
                    "compatible": True,
                    "reason": None,
                    "split": [[others[k] for k in group], rest],
                }
    return {"compatible": False, "reason": "no group of indices sums to 1", "split": None}


def three_fixed_points_check(report: SphereIndexReport, has_loop: bool) -> dict[str, Any]:
    """A sphere map with a simple homoclinic loop has at least 3 fixed points."""
    count = len(report.fixed_points)
    return {"fixed_point_count": count, "has_loop": has_loop, "holds": (count >= 3) if has_loop else None}
