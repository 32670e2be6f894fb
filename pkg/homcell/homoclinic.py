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

 Homoclinic points, simple homoclinic loops and the cells they bound.
 """

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from homcell import geometry
from homcell.config import DEFAULT_TOLERANCES, Tolerances
from homcell.errors import AmbiguousSign, DegenerateLoop, NoHomoclinicPoint
from homcell.fixed_points import FixedPointRecord
from homcell.geometry import OrientedPolygon
from homcell.manifolds import MINUS, PLUS, STABLE, UNSTABLE, ManifoldBranch, arc, evaluate_branch, zeta
from homcell.map_model import SmoothPlanarMap

POSITIVE = "positive"
NEGATIVE = "negative"
RHO = {POSITIVE: 1, NEGATIVE: 2}

TANGENTIAL = 0
MIN_OVERLAP_RUN = 8
# Chord crossings inside an overlap run flatter than this are artifacts.
OVERLAP_CHORD_SIN = 0.05
SIGN_TEST_RADII = (1e-4, 1e-3, 1e-2)
MIN_CELL_AREA = 1e-10
MAX_SIMPLIFY_DEPTH = 50


@dataclass
class HomoclinicPoint:
    """A point of W_u and W_s other than the saddle.

    Attributes:
        location: The point.
        t_u: Parameter on the unstable branch.
        t_s: Parameter on the stable branch.
        crossing_sign: +1 or -1 for the orientation of the crossing, 0 when tangential.
        transversal: False for tangential crossings and for overlap points.
        overlap: Found by the coincident-branch rule rather than as a crossing.
    """

    location: np.ndarray
    t_u: float
    t_s: float
    crossing_sign: int
    transversal: bool
    overlap: bool = False

    def to_json(self) -> dict[str, Any]:
        return {
            "x": float(self.location[0]),
            "y": float(self.location[1]),
            "t_u": float(self.t_u),
            "t_s": float(self.t_s),
            "crossing_sign": "tangential" if self.crossing_sign == TANGENTIAL else self.crossing_sign,
            "transversal": self.transversal,
            "overlap": self.overlap,
        }


@dataclass
class HomoclinicLoop:
    """The closed curve J_u followed by J_s.

    Attributes:
        saddle: The saddle p.
        p_prime: The homoclinic point closing the loop.
        j_u: Polyline from p to p' along the unstable branch.
        j_s: Polyline from p' back to p along the stable branch.
        u_direction: Unit direction in which J_u leaves p.
        s_direction: Unit direction in which J_s reaches p, pointing away from p.
        simple: J_u and J_s meet only at p and p'.
    """

    saddle: FixedPointRecord
    p_prime: HomoclinicPoint
    j_u: np.ndarray
    j_s: np.ndarray
    u_direction: np.ndarray
    s_direction: np.ndarray
    simple: bool

    def closed_curve(self) -> np.ndarray:
        return np.vstack([self.j_u, self.j_s[1:]])

    def polygon_vertices(self) -> np.ndarray:
        return np.vstack([self.j_u, self.j_s[1:-1]])


@dataclass
class HomoclinicCell:
    """The bounded complementary component of a simple homoclinic loop.

    Attributes:
        loop: The bounding loop.
        polygon: Counterclockwise polygon of the loop.
        sign: POSITIVE or NEGATIVE.
        rho: 1 for positive cells, 2 for negative ones.
        closure_is_d: The closure D of the cell is the cell plus the loop.
    """

    loop: HomoclinicLoop
    polygon: OrientedPolygon
    sign: str
    rho: int
    closure_is_d: bool = True

    @property
    def saddle(self) -> FixedPointRecord:
        return self.loop.saddle

    @property
    def area(self) -> float:
        return self.polygon.area

    def to_json(self) -> dict[str, Any]:
        return {
            "p": self.saddle.location.tolist(),
            "p_prime": self.loop.p_prime.location.tolist(),
            "sign": self.sign,
            "rho": self.rho,
            "area": self.area,
            "vertex_count": int(len(self.polygon.vertices)),
        }


def _param_at(branch: ManifoldBranch, segment: int, fraction: float) -> float:
    a, b = branch.params[segment], branch.params[segment + 1]
    return float(a + fraction * (b - a))


def _project(branch: ManifoldBranch, point: np.ndarray) -> tuple[float, float]:
    """Parameter and distance of the point of the branch polyline nearest to point."""
    a, b = branch.points[:-1], branch.points[1:]
    d = geometry.point_segment_distance(point[None, :], a, b)[0]
    k = int(np.argmin(d))
    seg = b[k] - a[k]
    denom = float(np.dot(seg, seg))
    w = 0.0 if denom == 0 else float(np.clip(np.dot(point - a[k], seg) / denom, 0.0, 1.0))
    return _param_at(branch, k, w), float(d[k])


def _curve_point(f: Optional[SmoothPlanarMap], branch: ManifoldBranch, t: float) -> np.ndarray:
    if f is not None and t >= 1.0:
        return evaluate_branch(f, branch, [t])[0]
    return zeta(branch, t)


def _line_intersection(a0, a1, b0, b1) -> Optional[np.ndarray]:
    r, q = a1 - a0, b1 - b0
    denom = float(geometry.cross(r, q))
    if denom == 0:
        return None
    s = float(geometry.cross(b0 - a0, q)) / denom
    return a0 + s * r


def polish_crossing(
    f: SmoothPlanarMap,
    wu: ManifoldBranch,
    ws: ManifoldBranch,
    u_interval: tuple[float, float],
    s_interval: tuple[float, float],
    tol: float,
    max_steps: int = 60,
) -> tuple[np.ndarray, float, float]:
    """Bisects both parameter intervals on the signed cross product of the other chord.

    Returns:
        (location, t_u, t_s) of the crossing of the true branches.
    """
    u0, u1 = u_interval
    s0, s1 = s_interval
    a0, a1 = _curve_point(f, wu, u0), _curve_point(f, wu, u1)
    b0, b1 = _curve_point(f, ws, s0), _curve_point(f, ws, s1)
    x = _line_intersection(a0, a1, b0, b1)
    if x is None:
        return 0.5 * (a0 + a1), 0.5 * (u0 + u1), 0.5 * (s0 + s1)
    for _ in range(max_steps):
        um = 0.5 * (u0 + u1)
        am = _curve_point(f, wu, um)
        if geometry.cross(b1 - b0, a0 - b0) * geometry.cross(b1 - b0, am - b0) <= 0:
            u1, a1 = um, am
        else:
            u0, a0 = um, am
        sm = 0.5 * (s0 + s1)
        bm = _curve_point(f, ws, sm)
        if geometry.cross(a1 - a0, b0 - a0) * geometry.cross(a1 - a0, bm - a0) <= 0:
            s1, b1 = sm, bm
        else:
            s0, b0 = sm, bm
        nxt = _line_intersection(a0, a1, b0, b1)
        if nxt is None:
            break
        moved = float(np.linalg.norm(nxt - x))
        x = nxt
        if moved < tol and max(np.linalg.norm(a1 - a0), np.linalg.norm(b1 - b0)) < math.sqrt(tol):
            break
    fraction_u = float(np.clip(np.dot(x - a0, a1 - a0) / max(np.dot(a1 - a0, a1 - a0), 1e-300), 0, 1))
    fraction_s = float(np.clip(np.dot(x - b0, b1 - b0) / max(np.dot(b1 - b0, b1 - b0), 1e-300), 0, 1))
    return x, u0 + fraction_u * (u1 - u0), s0 + fraction_s * (s1 - s0)


def _overlap_runs(wu: ManifoldBranch, ws: ManifoldBranch, exclusion_radius: float, tol: float):
    """Index ranges [start, end] of Wu vertices lying on Ws, at least MIN_OVERLAP_RUN long."""
    far = np.linalg.norm(wu.points - wu.origin, axis=1) > exclusion_radius
    near = far & (geometry.distance_to_polyline(wu.points, ws.points) < tol)
    runs = []
    start = None
    for k, flag in enumerate(np.append(near, False)):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            if k - start >= MIN_OVERLAP_RUN:
                runs.append((start, k - 1))
            start = None
    return runs


def _overlap_point(f, wu: ManifoldBranch, ws: ManifoldBranch, run) -> HomoclinicPoint:
    """The point of an overlap run farthest from the saddle, refined by a parabola in t."""
    start, end = run
    dist2 = np.sum((wu.points[start : end + 1] - wu.origin) ** 2, axis=1)
    k = start + int(np.argmax(dist2))
    t = float(wu.params[k])
    if start < k < end:
        ts = wu.params[k - 1 : k + 2]
        coeffs = np.polyfit(ts - ts[1], dist2[k - start - 1 : k - start + 2], 2)
        if coeffs[0] < 0:
            t = float(np.clip(ts[1] - coeffs[1] / (2 * coeffs[0]), ts[0], ts[2]))
    location = _curve_point(f, wu, t)
    t_s, _ = _project(ws, location)
    return HomoclinicPoint(location, t, t_s, TANGENTIAL, False, overlap=True)


def find_homoclinic_points(
    wu: ManifoldBranch,
    ws: ManifoldBranch,
    exclusion_radius: float = 1e-3,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    f: Optional[SmoothPlanarMap] = None,
) -> list[HomoclinicPoint]:
    """Intersections of an unstable and a stable branch away from the saddle.

    Segment crossings are found block-wise over all segment pairs. With the map
    at hand, transversal crossings are polished on the true branches. Runs where
    the branches coincide contribute one overlap point each.

    Returns:
        Points sorted by t_u.
    """
    if wu.kind != UNSTABLE or ws.kind != STABLE:
        raise ValueError("expected an unstable and a stable branch")
    runs = _overlap_runs(wu, ws, exclusion_radius, tolerances.overlap)
    in_run = np.zeros(len(wu.points), dtype=bool)
    for start, end in runs:
        in_run[max(start - 1, 0) : end + 1] = True

    points = []
    for c in geometry.segment_crossings(wu.points, ws.points):
        if np.linalg.norm(c.point - wu.origin) <= exclusion_radius:
            continue
        if in_run[c.i] and abs(c.sin_angle) < OVERLAP_CHORD_SIN:
            continue
        t_u = _param_at(wu, c.i, c.s)
        t_s = _param_at(ws, c.j, c.u)
        location = c.point
        if abs(c.sin_angle) < tolerances.tangency:
            points.append(HomoclinicPoint(location, t_u, t_s, TANGENTIAL, False))
            continue
        if f is not None:
            location, t_u, t_s = polish_crossing(
                f, wu, ws,
                (wu.params[c.i], wu.params[c.i + 1]),
                (ws.params[c.j], ws.params[c.j + 1]),
                tolerances.polish,
            )
        points.append(HomoclinicPoint(location, t_u, t_s, 1 if c.sin_angle > 0 else -1, True))
    for run in runs:
        points.append(_overlap_point(f, wu, ws, run))

    points.sort(key=lambda h: h.t_u)
    deduped: list[HomoclinicPoint] = []
    for h in points:
        if all(np.linalg.norm(h.location - k.location) > 1e-9 for k in deduped):
            deduped.append(h)
    logging.debug(
        f"{wu.name} x {ws.name}: {sum(h.transversal for h in deduped)} transversal, "
        f"{len(deduped)} total homoclinic points"
    )
    return deduped


def _arc_crossings(j_u: np.ndarray, j_s_forward: np.ndarray, p: np.ndarray, p_prime: np.ndarray, tol: float):
    crossings = []
    for c in geometry.segment_crossings(j_u, j_s_forward):
        if np.linalg.norm(c.point - p) <= tol or np.linalg.norm(c.point - p_prime) <= tol:
            continue
        crossings.append(c)
    return crossings


def build_simple_loop(
    p_prime: HomoclinicPoint,
    wu: ManifoldBranch,
    ws: ManifoldBranch,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    exclusion_radius: float = 1e-3,
) -> HomoclinicLoop:
    """The loop J_u = zeta_u([0, t_u]), J_s = zeta_s([0, t_s]) reversed, made simple.

    While the arcs cross away from their endpoints, p' moves to the crossing with
    the smallest t_u.

    Raises:
        DegenerateLoop: the arcs bound no region of positive area.
    """
    p = wu.origin
    current = p_prime
    simple = False
    for _ in range(MAX_SIMPLIFY_DEPTH):
        j_u = arc(wu, current.t_u)
        j_s_forward = arc(ws, current.t_s)
        j_u[-1] = current.location
        j_s_forward[-1] = current.location
        crossings = _arc_crossings(j_u, j_s_forward, p, current.location, max(exclusion_radius, 1e-9))
        crossings = [c for c in crossings if abs(c.sin_angle) >= tolerances.tangency or not current.overlap]
        if not crossings:
            simple = True
            break
        first = min(crossings, key=lambda c: (c.i, c.s))
        current = HomoclinicPoint(
            first.point,
            _param_at(wu, first.i, first.s),
            _param_at(ws, first.j, first.u),
            TANGENTIAL if abs(first.sin_angle) < tolerances.tangency else (1 if first.sin_angle > 0 else -1),
            abs(first.sin_angle) >= tolerances.tangency,
        )
        logging.debug(f"Loop not simple; moving p' to {current.location.tolist()}")
    if not simple:
        raise DegenerateLoop(f"no simple sub-loop after {MAX_SIMPLIFY_DEPTH} reductions")
    loop = HomoclinicLoop(
        saddle=wu.saddle,
        p_prime=current,
        j_u=j_u,
        j_s=j_s_forward[::-1].copy(),
        u_direction=wu.eigenvector.copy(),
        s_direction=ws.eigenvector.copy(),
        simple=True,
    )
    if abs(geometry.signed_area(loop.polygon_vertices())) <= MIN_CELL_AREA:
        raise DegenerateLoop(
            f"loop through p'={current.location.tolist()} bounds area <= {MIN_CELL_AREA:g}"
        )
    return loop


def loop_from_arcs(
    saddle: FixedPointRecord, j_u, j_s, u_direction=None, s_direction=None
) -> HomoclinicLoop:
    """A loop from explicit arcs; j_u runs p -> p' and j_s runs p' -> p.

    Departing directions default to the first segment of each arc.
    """
    j_u = np.asarray(j_u, dtype=float)
    j_s = np.asarray(j_s, dtype=float)
    if not (np.allclose(j_u[0], saddle.location) and np.allclose(j_s[-1], saddle.location)):
        raise DegenerateLoop("arcs must start and end at the saddle")
    if not np.allclose(j_u[-1], j_s[0]):
        raise DegenerateLoop("arcs must meet at p'")

    def unit(v):
        v = np.asarray(v, dtype=float)
        return v / np.linalg.norm(v)

    u = unit(u_direction if u_direction is not None else j_u[1] - j_u[0])
    s = unit(s_direction if s_direction is not None else j_s[-2] - j_s[-1])
    crossings = _arc_crossings(j_u, j_s[::-1], saddle.location, j_u[-1], 1e-9)
    p_prime = HomoclinicPoint(j_u[-1].copy(), float(len(j_u) - 1), float(len(j_s) - 1), TANGENTIAL, False)
    return HomoclinicLoop(saddle, p_prime, j_u, j_s, u, s, simple=not crossings)


def classify_cell_sign(
    polygon: OrientedPolygon,
    loop: HomoclinicLoop,
    radii: Sequence[float] = SIGN_TEST_RADII,
) -> str:
    """POSITIVE when the cell near p fills the quadrant between the departing arcs.

    Test points are placed at several angles in each open quadrant of the chart
    whose axes are u_direction and s_direction, at each radius. The quadrant
    spanned by the two departing arcs is Q. Positive cells occupy only Q,
    negative cells occupy the three other quadrants.

    Raises:
        AmbiguousSign: the occupancy is mixed or differs between radii.
    """
    p = loop.saddle.location
    basis = np.column_stack([loop.u_direction, loop.s_direction])
    verdicts = []
    diagnostics = {}
    for r in radii:
        occupancy = []
        for quadrant in range(4):
            angles = quadrant * math.pi / 2 + np.array([1, 2, 3]) * math.pi / 8
            chart = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
            directions = chart @ basis.T
            directions /= np.linalg.norm(directions, axis=1, keepdims=True)
            inside = geometry.winding_numbers(polygon.vertices, p + r * directions) != 0
            occupancy.append(bool(inside.all()) if inside.all() or not inside.any() else None)
        diagnostics[r] = occupancy
        if occupancy == [True, False, False, False]:
            verdicts.append(POSITIVE)
        elif occupancy == [False, True, True, True]:
            verdicts.append(NEGATIVE)
        else:
            verdicts.append(None)
    if verdicts[0] is None or verdicts.count(verdicts[0]) != len(verdicts):
        raise AmbiguousSign(
            f"quadrant occupancy near p={p.tolist()} is inconclusive",
            occupancy={str(r): occ for r, occ in diagnostics.items()},
        )
    return verdicts[0]


def cell_from_loop(loop: HomoclinicLoop, radii: Sequence[float] = SIGN_TEST_RADII) -> HomoclinicCell:
    """The bounded cell of a simple loop, with its sign and rho.

    Raises:
        DegenerateLoop: the loop is not simple or bounds no area.
        AmbiguousSign: see classify_cell_sign.
    """
    if not loop.simple:
        raise DegenerateLoop("cells need a simple loop")
    vertices = geometry.drop_duplicates(loop.polygon_vertices())
    if len(vertices) < 3 or abs(geometry.signed_area(vertices)) <= MIN_CELL_AREA:
        raise DegenerateLoop(f"loop bounds area <= {MIN_CELL_AREA:g}")
    polygon = OrientedPolygon.from_vertices(vertices).counterclockwise()
    sign = classify_cell_sign(polygon, loop, radii)
    logging.debug(f"Cell at {loop.saddle.location.tolist()}: {sign}, area {polygon.area:.6g}")
    return HomoclinicCell(loop, polygon, sign, RHO[sign])


def point_in_cell(cell: HomoclinicCell, x, band: float = DEFAULT_TOLERANCES.boundary_band) -> str:
    """geometry.INSIDE, OUTSIDE or BOUNDARY (within band of the loop)."""
    return str(geometry.classify_points(cell.polygon.vertices, np.asarray(x, dtype=float)[None, :], band)[0])


@dataclass
class CellSearch:
    """All homoclinic points found for a saddle, and the chosen cell."""

    points: dict[tuple[str, str], list[HomoclinicPoint]]
    chosen: tuple[str, str]
    p_prime: HomoclinicPoint
    loop: HomoclinicLoop
    cell: HomoclinicCell

    def to_json(self) -> dict[str, Any]:
        return {
            "homoclinic_points": {
                f"{u}/{s}": [h.to_json() for h in pts] for (u, s), pts in sorted(self.points.items())
            },
            "chosen_pair": list(self.chosen),
            "cell": self.cell.to_json(),
        }


def find_cell(
    branches: dict[tuple[str, str], ManifoldBranch],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    exclusion_radius: float = 1e-3,
    homoclinic_index: int = 0,
    f: Optional[SmoothPlanarMap] = None,
) -> CellSearch:
    """Picks a primary homoclinic point over all unstable/stable side pairs and builds its cell.

    Transversal points come first, ordered by t_u; overlap points follow in
    side-pair order. homoclinic_index selects from that ordering.

    Raises:
        NoHomoclinicPoint: the branches do not meet away from the saddle.
    """
    pair_order = [(PLUS, PLUS), (PLUS, MINUS), (MINUS, PLUS), (MINUS, MINUS)]
    found: dict[tuple[str, str], list[HomoclinicPoint]] = {}
    ranked = []
    for rank, (u_side, s_side) in enumerate(pair_order):
        wu = branches.get((UNSTABLE, u_side))
        ws = branches.get((STABLE, s_side))
        if wu is None or ws is None:
            continue
        pts = find_homoclinic_points(wu, ws, exclusion_radius, tolerances, f)
        found[(u_side, s_side)] = pts
        for h in pts:
            key = (0, h.t_u, rank) if h.transversal else (1, rank, h.t_u)
            ranked.append((key, (u_side, s_side), h))
    ranked.sort(key=lambda item: item[0])
    candidates = [item for item in ranked if item[0][0] == 0 or item[2].overlap]
    if not candidates:
        raise NoHomoclinicPoint("no homoclinic point found", pairs=sorted(found))
    if not 0 <= homoclinic_index < len(candidates):
        raise NoHomoclinicPoint(
            f"homoclinic point #{homoclinic_index} requested, {len(candidates)} found"
        )
    _, pair, h = candidates[homoclinic_index]
    wu, ws = branches[(UNSTABLE, pair[0])], branches[(STABLE, pair[1])]
    loop = build_simple_loop(h, wu, ws, tolerances, exclusion_radius)
    cell = cell_from_loop(loop)
    return CellSearch(found, pair, loop.p_prime, loop, cell)
