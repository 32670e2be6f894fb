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

 Fixed point index as the degree of the displacement direction along closed curves.
 """

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from homcell.config import DEFAULT_TOLERANCES, Tolerances
from homcell.errors import FixedPointOnCurve, HomcellError, NotIsolated, RefinementExhausted
from homcell.geometry import OrientedPolygon
from homcell.map_model import SmoothPlanarMap

MAX_SEGMENTS = 2**20
# Consecutive displacement directions must differ by less than this.
MAX_TURN = math.pi / 2
DEFAULT_INDEX_RADIUS = 1e-3
MIN_INDEX_RADIUS = 1e-8
CIRCLE_SEGMENTS = 32


@dataclass
class WindingResult:
    """Degree of x -> (x - g(x)) / |x - g(x)| along one traversal of a curve.

    Attributes:
        degree: Winding of the displacement direction.
        min_displacement: Smallest |x - g(x)| over the refined samples.
        segment_count: Number of segments after adaptive refinement.
        certified: Every turn passed and min_displacement is clear of the
            fixed-point-on-curve floor by a factor of 10.
    """

    degree: int
    min_displacement: float
    segment_count: int
    certified: bool

    def to_json(self) -> dict[str, Any]:
        return {
            "degree": self.degree,
            "min_displacement": self.min_displacement,
            "segments": self.segment_count,
            "certified": self.certified,
        }


def _wrap(angle: np.ndarray) -> np.ndarray:
    """Maps angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - angle, 2.0 * np.pi)


def displacement(g: SmoothPlanarMap, n: int, points: np.ndarray) -> np.ndarray:
    """x - g^n(x) for a batch of points."""
    with np.errstate(all="ignore"):
        return points - g.iterate(points, n)


def index_along_curve(
    g: SmoothPlanarMap,
    curve: OrientedPolygon,
    n: int = 1,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    max_segments: int = MAX_SEGMENTS,
) -> WindingResult:
    """Winding of the displacement of g^n along the curve, in vertex order.

    Edges are bisected until consecutive displacement directions turn by less
    than a quarter turn; new midpoints are evaluated in one batch per round.
    A clockwise curve yields the negated degree of its counterclockwise twin.

    Raises:
        FixedPointOnCurve: a sample displacement falls below the floor.
        RefinementExhausted: the curve needs more than max_segments segments.
    """
    points = np.asarray(curve.vertices, dtype=float)
    disp = displacement(g, n, points)
    floor = tolerances.fixed_point_on_curve
    while True:
        if not np.all(np.isfinite(disp)):
            raise RefinementExhausted(f"displacement of f^{n} is not finite on the curve")
        norms = np.linalg.norm(disp, axis=1)
        k = int(np.argmin(norms))
        if norms[k] < floor:
            raise FixedPointOnCurve(
                f"|x - f^{n}(x)| = {norms[k]:.3e} at {points[k]} is below {floor:g}",
                point=points[k].tolist(),
            )
        angles = np.arctan2(disp[:, 1], disp[:, 0])
        turns = _wrap(np.roll(angles, -1) - angles)
        bad = np.flatnonzero(np.abs(turns) >= MAX_TURN)
        if len(bad) == 0:
            break
        if len(points) + len(bad) > max_segments:
            raise RefinementExhausted(
                f"index curve needs more than {max_segments} segments",
                segments=len(points),
            )
        following = (bad + 1) % len(points)
        mids = 0.5 * (points[bad] + points[following])
        mid_disp = displacement(g, n, mids)
        points = np.insert(points, bad + 1, mids, axis=0)
        disp = np.insert(disp, bad + 1, mid_disp, axis=0)

    degree = int(round(float(np.sum(turns)) / (2.0 * math.pi)))
    min_disp = float(norms.min())
    certified = min_disp > 10.0 * floor
    logging.debug(
        f"winding of f^{n}: degree {degree} over {len(points)} segments, min displacement {min_disp:.3e}"
    )
    return WindingResult(degree, min_disp, len(points), certified)


def index_at_point(
    f: SmoothPlanarMap,
    n: int,
    p,
    radius: float = DEFAULT_INDEX_RADIUS,
    min_radius: float = MIN_INDEX_RADIUS,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> int:
    """Index of an isolated fixed point p of f^n.

    Circles of radius r, r/2, r/4, ... are tried until three consecutive radii
    give the same certified degree.

    Raises:
        NotIsolated: no three consecutive radii agree before min_radius.
    """
    p = np.asarray(p, dtype=float)
    window: list = []
    r = radius
    while r >= min_radius:
        try:
            result = index_along_curve(f, OrientedPolygon.circle(p, r, CIRCLE_SEGMENTS), n, tolerances)
            window.append(result.degree if result.certified else None)
        except (FixedPointOnCurve, RefinementExhausted) as e:
            logging.debug(f"index circle of radius {r:g} about {p} failed: {e}")
            window.append(None)
        window = window[-3:]
        if len(window) == 3 and window[0] is not None and window.count(window[0]) == 3:
            return window[0]
        r /= 2.0
    raise NotIsolated(
        f"index of f^{n} at {p.tolist()} is not stable over radii down to {min_radius:g}",
        point=p.tolist(),
        last_degrees=window,
    )


def index_of_block(
    f: SmoothPlanarMap,
    n: int,
    region: OrientedPolygon,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> int:
    """Index of f^n over the fixed points enclosed by a counterclockwise region."""
    result = index_along_curve(f, region.counterclockwise(), n, tolerances)
    if not result.certified:
        logging.warning(
            f"block index {result.degree} of f^{n} is not certified "
            f"(min displacement {result.min_displacement:.3e})"
        )
    return result.degree


def sampled_degree(g: SmoothPlanarMap, curve: OrientedPolygon, n: int = 1, samples: int = 10**6) -> int:
    """Winding of the displacement from dense uniform samples along the curve.

    Used as an independent check on the adaptive degree; it certifies nothing.
    """
    closed = curve.closed()
    edge_lengths = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    total = float(edge_lengths.sum())
    winding = 0.0
    first_angle = None
    last_angle = None
    for a, b, length in zip(closed[:-1], closed[1:], edge_lengths):
        count = max(1, int(round(samples * length / total)))
        s = np.arange(count) / count
        pts = a + s[:, None] * (b - a)
        for start in range(0, count, 65536):
            d = displacement(g, n, pts[start : start + 65536])
            angles = np.arctan2(d[:, 1], d[:, 0])
            if last_angle is not None:
                winding += float(_wrap(angles[0] - last_angle))
            else:
                first_angle = angles[0]
            winding += float(np.sum(_wrap(np.diff(angles))))
            last_angle = angles[-1]
    winding += float(_wrap(first_angle - last_angle))
    return int(round(winding / (2.0 * math.pi)))


def try_index_at_point(f: SmoothPlanarMap, n: int, p, **kwargs):
    """Like index_at_point, returning (index or None, error message or None)."""
    try:
        return index_at_point(f, n, p, **kwargs), None
    except HomcellError as e:
        return None, str(e)
