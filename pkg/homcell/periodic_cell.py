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

 Periodic blocks inside a homoclinic cell, and the checks built on their indices.
 """

from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from homcell import geometry
from homcell.config import DEFAULT_TOLERANCES, Tolerances, max_threads
from homcell.errors import HomcellError, NewtonFailure
from homcell.fixed_points import (
    DIRECT_SADDLE,
    SINK,
    SOURCE,
    TWISTED_SADDLE,
    FixedPointRecord,
    grid_points,
    local_minima,
    make_record,
    minimal_period,
    newton_refine,
    orbit,
)
from homcell.homoclinic import HomoclinicCell
from homcell.index import DEFAULT_INDEX_RADIUS, index_along_curve, index_at_point
from homcell.map_model import SmoothPlanarMap, jacobian, perturbed

IN = "in"
OUT = "out"
UNCERTAIN = "uncertain"

MAX_N = 16
MAX_A1_R = 3
MIN_BLOCK_GRID = 20
MAX_SEEDS = 400


@dataclass(frozen=True)
class VnRegion:
    """Points of the cell whose first n - 1 images stay in the cell.

    Attributes:
        f: The map.
        cell: The homoclinic cell V.
        n: Number of points of each orbit segment that must lie in V.
        band: Boundary band; iterates within it make membership uncertain.
        sample_grid: Grid resolution used when seeding inside the region.
    """

    f: SmoothPlanarMap
    cell: HomoclinicCell
    n: int
    band: float = DEFAULT_TOLERANCES.boundary_band
    sample_grid: int = 200


def vn_labels(region: VnRegion, points) -> np.ndarray:
    """Vectorized vn_membership; iterates only points still inside."""
    points = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    labels = np.full(len(points), IN, dtype=object)
    alive = np.ones(len(points), dtype=bool)
    vertices = region.cell.polygon.vertices
    for i in range(region.n):
        idx = np.flatnonzero(alive)
        if len(idx) == 0:
            break
        where = geometry.classify_points(vertices, points[idx], region.band)
        labels[idx[where == geometry.OUTSIDE]] = OUT
        labels[idx[(where == geometry.BOUNDARY) & (labels[idx] != OUT)]] = UNCERTAIN
        alive[idx[where == geometry.OUTSIDE]] = False
        if i < region.n - 1:
            idx = np.flatnonzero(alive)
            if len(idx):
                with np.errstate(all="ignore"):
                    points[idx] = region.f.map_many(points[idx])
    return labels


def vn_membership(region: VnRegion, x) -> str:
    """IN, OUT or UNCERTAIN for a single point."""
    return str(vn_labels(region, [x])[0])


@dataclass
class BlockReport:
    """Fixed points of f^n in V_n and their index.

    Attributes:
        n: The iterate.
        orbits: Records of every fixed point of f^n in V_n, sorted.
        per_point_indices: Index of f^n at each record, None when not certified.
        block_index: Sum of the indices, None unless every index is certified.
        rho: The cell's predicted block index.
        match: block_index == rho.
        certified: Every index was certified.
        diagnostics: Seeding density, residuals, uncertain counts and the
            boundary winding cross-check.
    """

    n: int
    orbits: list[FixedPointRecord]
    per_point_indices: list[Optional[int]]
    block_index: Optional[int]
    rho: int
    match: bool
    certified: bool
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "orbits": [r.to_json() for r in self.orbits],
            "per_point_indices": self.per_point_indices,
            "block_index": self.block_index,
            "rho": self.rho,
            "match": self.match,
            "certified": self.certified,
            "diagnostics": self.diagnostics,
        }


def _sorted_unique(points: list[np.ndarray], tol: float) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for p in sorted(points, key=lambda q: (q[0], q[1])):
        if all(np.linalg.norm(p - k) > tol for k in kept):
            kept.append(p)
    return kept


def _search_in_cell(
    f: SmoothPlanarMap, cell: HomoclinicCell, n: int, grid: int, tolerances: Tolerances
) -> tuple[list[np.ndarray], dict[str, Any]]:
    """Fixed points of f^n strictly inside V, seeded from residual minima on a masked grid."""
    inside_v = VnRegion(f, cell, 1, tolerances.boundary_band)
    pts = grid_points(cell.polygon.bounding_box(), grid)
    mask = vn_labels(inside_v, pts) == IN
    residuals = np.full(len(pts), np.inf)
    if mask.any():
        with np.errstate(all="ignore"):
            images = f.iterate(pts[mask], n)
        r = np.linalg.norm(images - pts[mask], axis=1)
        residuals[mask] = np.where(np.isfinite(r), r, np.inf)
    grid_r = residuals.reshape(grid, grid)
    minima = local_minima(grid_r)
    minima = minima[np.argsort(grid_r.ravel()[minima], kind="stable")][:MAX_SEEDS]
    seeds = pts[minima]

    def refine(seed):
        try:
            return newton_refine(f, n, seed, tolerances)
        except NewtonFailure:
            return None

    with concurrent.futures.ThreadPoolExecutor(max_workers=max_threads()) as pool:
        refined = [x for x in pool.map(refine, seeds) if x is not None]

    candidates = []
    for x in _sorted_unique(refined, tolerances.dedup):
        m = minimal_period(f, n, x, max(tolerances.residual, 1e-9))
        candidates.extend(orbit(f, x, m))
    found = []
    for x in _sorted_unique(candidates, tolerances.dedup):
        if np.linalg.norm(f.iterate(x, n) - x) > tolerances.residual:
            try:
                x = newton_refine(f, n, x, tolerances)
            except NewtonFailure:
                continue
        if np.linalg.norm(x - cell.saddle.location) <= tolerances.dedup:
            continue
        if vn_membership(inside_v, x) == IN:
            found.append(x)
    found = _sorted_unique(found, tolerances.dedup)
    diagnostics = {
        "grid": grid,
        "masked_points": int(mask.sum()),
        "seeds": int(len(seeds)),
        "converged": int(len(refined)),
    }
    return found, diagnostics


def eroded_polygon(cell: HomoclinicCell, erosion: float) -> geometry.OrientedPolygon:
    return geometry.OrientedPolygon.from_vertices(
        geometry.offset_polygon(cell.polygon.vertices, -erosion)
    ).counterclockwise()


def find_block(
    f: SmoothPlanarMap,
    cell: HomoclinicCell,
    n: int,
    grid: int = 200,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    index_radius: float = DEFAULT_INDEX_RADIUS,
) -> BlockReport:
    """Finds the fixed points of f^n in V_n and sums their indices.

    Two independent numbers are reported: the per-point index sum over V_n,
    which is compared with rho, and the winding of f^n along the cell polygon
    eroded by tolerances.erosion, which is compared with the index sum over all
    fixed points of f^n in V. The two fixed point sets coincide when V_n holds
    every fixed point of f^n in V.

    NotIsolated from a point index marks the report non-certified rather than
    raising.
    """
    if grid < MIN_BLOCK_GRID:
        raise ValueError(f"block grid must be at least {MIN_BLOCK_GRID}, got {grid}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    region = VnRegion(f, cell, n, tolerances.boundary_band, grid)
    in_v, diagnostics = _search_in_cell(f, cell, n, grid, tolerances)
    labels = [vn_membership(region, x) for x in in_v]
    diagnostics["uncertain"] = int(sum(label == UNCERTAIN for label in labels))

    indices: list[Optional[int]] = []
    errors = []
    for x in in_v:
        try:
            indices.append(index_at_point(f, n, x, radius=index_radius, tolerances=tolerances))
        except HomcellError as e:
            indices.append(None)
            errors.append(str(e))

    block = [(x, i) for x, i, label in zip(in_v, indices, labels) if label == IN]
    records = [make_record(f, n, x, tolerances) for x, _ in block]
    per_point = [i for _, i in block]
    for record, i in zip(records, per_point):
        record.index = i
    certified = all(i is not None for i in per_point)
    block_index = int(sum(per_point)) if certified else None

    v_index_sum = int(sum(indices)) if all(i is not None for i in indices) else None
    boundary_winding = None
    polygon = eroded_polygon(cell, tolerances.erosion)
    clearance = (
        float(geometry.distance_to_polyline(np.array(in_v), cell.polygon.vertices, closed=True).min())
        if in_v
        else float("inf")
    )
    if clearance > tolerances.erosion:
        try:
            result = index_along_curve(f, polygon, n, tolerances)
            boundary_winding = result.degree if result.certified else None
        except HomcellError as e:
            errors.append(f"boundary winding: {e}")
    else:
        errors.append(f"erosion {tolerances.erosion:g} exceeds fixed point clearance {clearance:.3e}")
    diagnostics.update(
        {
            "max_residual": max((r.residual for r in records), default=0.0),
            "fixed_points_in_v": len(in_v),
            "index_sum_in_v": v_index_sum,
            "boundary_winding": boundary_winding,
            "oracles_agree": (
                None if boundary_winding is None or v_index_sum is None else boundary_winding == v_index_sum
            ),
            "errors": errors,
        }
    )
    match = block_index is not None and block_index == cell.rho
    logging.info(
        f"n={n}: {len(records)} fixed points in V_n, block index {block_index}, rho {cell.rho}, "
        f"boundary winding {boundary_winding}"
    )
    return BlockReport(n, records, per_point, block_index, cell.rho, match, certified, diagnostics)


def verify_theorem_a(
    f: SmoothPlanarMap,
    cell: HomoclinicCell,
    n_max: int,
    grid: int = 200,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    index_radius: float = DEFAULT_INDEX_RADIUS,
) -> list[BlockReport]:
    """find_block for n = 1..n_max; a failure at one n does not stop the others."""
    if not 1 <= n_max <= MAX_N:
        raise ValueError(f"n_max must lie in [1, {MAX_N}], got {n_max}")
    reports = []
    for n in range(1, n_max + 1):
        try:
            reports.append(find_block(f, cell, n, grid, tolerances, index_radius))
        except HomcellError as e:
            logging.warning(f"block for n={n} is not certifiable: {e}")
            reports.append(
                BlockReport(n, [], [], None, cell.rho, False, False, {"errors": [str(e)]})
            )
    return reports


HYPERBOLIC_PERIODIC = (SINK, SOURCE, DIRECT_SADDLE, TWISTED_SADDLE)


@dataclass
class A1Level:
    """Orbits of cardinality 2^k in the cell."""

    k: int
    period: int
    orbits: list[FixedPointRecord]
    alternative_a: bool
    alternative_b: bool
    hypothesis_void: bool
    complete: bool

    def to_json(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "period": self.period,
            "orbits": [r.to_json() for r in self.orbits],
            "alternative_a": self.alternative_a,
            "alternative_b": self.alternative_b,
            "hypothesis_void": self.hypothesis_void,
            "complete": self.complete,
        }


@dataclass
class A1Report:
    """Empirical reading of the power-of-two orbit alternative."""

    r: int
    levels: list[A1Level]

    @property
    def hypothesis_void(self) -> bool:
        return any(level.hypothesis_void for level in self.levels)

    @property
    def holds(self) -> Optional[bool]:
        """None when the hyperbolicity hypothesis fails somewhere."""
        if self.hypothesis_void:
            return None
        return all(level.alternative_a or level.alternative_b for level in self.levels)

    def to_json(self) -> dict[str, Any]:
        return {
            "r": self.r,
            "levels": [level.to_json() for level in self.levels],
            "hypothesis_void": self.hypothesis_void,
            "holds": self.holds,
        }


def _one_per_orbit(f: SmoothPlanarMap, records: Sequence[FixedPointRecord], tol: float):
    chosen = []
    covered: list[np.ndarray] = []
    for r in sorted(records, key=lambda r: (r.location[0], r.location[1])):
        if any(np.linalg.norm(r.location - c) <= tol for c in covered):
            continue
        covered.extend(orbit(f, r.location, r.minimal_period))
        chosen.append(r)
    return chosen


def verify_theorem_a1(
    f: SmoothPlanarMap,
    cell: HomoclinicCell,
    r: int,
    grid: int = 200,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    blocks: Optional[dict[int, BlockReport]] = None,
) -> A1Report:
    """Classifies the orbits of cardinality 2^k in V for k = 0..r.

    Alternative (a) is an attracting or repelling orbit, alternative (b) a
    twisted saddle orbit. Any non-hyperbolic orbit voids the hypothesis.

    Args:
        blocks: Already computed BlockReports keyed by n, reused when present.
    """
    if not 0 <= r <= MAX_A1_R:
        raise ValueError(f"r must lie in [0, {MAX_A1_R}], got {r}")
    blocks = dict(blocks or {})
    levels = []
    for k in range(r + 1):
        n = 2**k
        if n not in blocks:
            blocks[n] = find_block(f, cell, n, grid, tolerances)
        block = blocks[n]
        exact = [rec for rec in block.orbits if rec.minimal_period == n]
        orbits = _one_per_orbit(f, exact, tolerances.dedup)
        classes = {rec.classification for rec in orbits}
        void = any(rec.classification not in HYPERBOLIC_PERIODIC or rec.borderline for rec in orbits)
        levels.append(
            A1Level(
                k=k,
                period=n,
                orbits=orbits,
                alternative_a=bool(classes & {SINK, SOURCE}),
                alternative_b=TWISTED_SADDLE in classes,
                hypothesis_void=void,
                complete=block.certified,
            )
        )
    return A1Report(r, levels)


def verify_all_saddles(report: A1Report) -> dict[str, Any]:
    """If every 2^k-orbit found is a saddle, a twisted saddle orbit must exist at each k."""
    all_saddles = all(
        rec.classification in (DIRECT_SADDLE, TWISTED_SADDLE) for level in report.levels for rec in level.orbits
    )
    twisted_everywhere = all(level.alternative_b for level in report.levels)
    return {
        "all_saddles": all_saddles,
        "twisted_at_every_k": twisted_everywhere,
        "holds": (not all_saddles) or twisted_everywhere,
    }


def verify_dissipative(
    f: SmoothPlanarMap, cell: HomoclinicCell, report: A1Report, samples: int = 20
) -> dict[str, Any]:
    """Area contraction in V plus hyperbolicity gives an attractor or a 2^k-orbit for every k."""
    pts = grid_points(cell.polygon.bounding_box(), samples)
    pts = pts[geometry.winding_numbers(cell.polygon.vertices, pts) != 0]
    dets = np.array([np.linalg.det(jacobian(f, p)) for p in pts])
    dissipative = bool(len(dets)) and bool(np.all((dets > 0) & (dets < 1)))
    attractor = any(rec.classification == SINK for level in report.levels for rec in level.orbits)
    every_k = all(level.orbits for level in report.levels)
    applies = dissipative and not report.hypothesis_void
    return {
        "dissipative": dissipative,
        "max_det": float(dets.max()) if len(dets) else None,
        "all_hyperbolic": not report.hypothesis_void,
        "periodic_attractor": attractor,
        "orbit_at_every_k": every_k,
        "holds": (attractor or every_k) if applies else None,
    }


def verify_persistence(
    f: SmoothPlanarMap,
    cell: HomoclinicCell,
    epsilons: Sequence[float],
    n: int = 1,
    direction: Sequence[float] = (1.0, 0.5),
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list[dict[str, Any]]:
    """Winding of (f + eps c)^n along the eroded cell boundary, per eps.

    The degree cannot change while no fixed point crosses the curve, so small
    perturbations keep the unperturbed value.
    """
    polygon = eroded_polygon(cell, tolerances.erosion)
    baseline = index_along_curve(f, polygon, n, tolerances).degree
    out = []
    for eps in epsilons:
        g = perturbed(f, eps * np.asarray(direction, dtype=float))
        try:
            result = index_along_curve(g, polygon, n, tolerances)
            degree, certified, error = result.degree, result.certified, None
        except HomcellError as e:
            degree, certified, error = None, False, str(e)
        out.append(
            {
                "epsilon": float(eps),
                "degree": degree,
                "baseline": baseline,
                "certified": certified,
                "stable": degree == baseline,
                "equals_rho": degree == cell.rho,
                "error": error,
            }
        )
    return out
