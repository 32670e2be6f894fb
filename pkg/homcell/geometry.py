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

 Planar polygon and polyline predicates, vectorized over numpy arrays.
 """

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

COUNTERCLOCKWISE = "counterclockwise"
CLOCKWISE = "clockwise"

INSIDE = "inside"
OUTSIDE = "outside"
BOUNDARY = "boundary"

# Pairs of segments are tested in blocks of this many per side.
BLOCK = 512
# Miter joins longer than this many offsets are beveled.
MITER_LIMIT = 4.0


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def is_left(point: np.ndarray, l0: np.ndarray, l1: np.ndarray) -> np.ndarray:
    """Positive when point is left of the directed line l0 -> l1, zero on it."""
    return cross(l1 - l0, point - l0)


def signed_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    w = np.roll(v, -1, axis=0)
    return 0.5 * float(np.sum(cross(v, w)))


def cumulative_arclength(polyline) -> np.ndarray:
    p = np.asarray(polyline, dtype=float)
    if len(p) == 0:
        return np.zeros(0)
    return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(p, axis=0), axis=1))])


def polyline_length(polyline) -> float:
    return float(cumulative_arclength(polyline)[-1]) if len(polyline) else 0.0


def drop_duplicates(points, tol: float = 0.0) -> np.ndarray:
    """Removes consecutive points closer than tol."""
    p = np.asarray(points, dtype=float)
    if len(p) < 2:
        return p
    keep = [0]
    for i in range(1, len(p)):
        if np.linalg.norm(p[i] - p[keep[-1]]) > tol:
            keep.append(i)
    return p[keep]


@dataclass(frozen=True)
class OrientedPolygon:
    """A closed polygon; the last vertex connects back to the first.

    Attributes:
        vertices: (N, 2) array, N >= 3, without the closing repeat.
        orientation: COUNTERCLOCKWISE or CLOCKWISE.
    """

    vertices: np.ndarray
    orientation: str = COUNTERCLOCKWISE

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError(f"a polygon needs at least 3 planar vertices, got shape {v.shape}")
        if self.orientation not in (COUNTERCLOCKWISE, CLOCKWISE):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_vertices(cls, vertices) -> "OrientedPolygon":
        """Wraps vertices, reading the orientation off the signed area."""
        v = np.asarray(vertices, dtype=float)
        if len(v) > 1 and np.array_equal(v[0], v[-1]):
            v = v[:-1]
        return cls(v, COUNTERCLOCKWISE if signed_area(v) >= 0 else CLOCKWISE)

    @classmethod
    def circle(cls, center, radius: float, segments: int = 64) -> "OrientedPolygon":
        theta = np.linspace(0.0, 2.0 * math.pi, segments, endpoint=False)
        c = np.asarray(center, dtype=float)
        return cls(c + radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1))

    @property
    def signed_area(self) -> float:
        return signed_area(self.vertices)

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    def closed(self) -> np.ndarray:
        return np.vstack([self.vertices, self.vertices[:1]])

    def reversed(self) -> "OrientedPolygon":
        flipped = CLOCKWISE if self.orientation == COUNTERCLOCKWISE else COUNTERCLOCKWISE
        return OrientedPolygon(self.vertices[::-1].copy(), flipped)

    def counterclockwise(self) -> "OrientedPolygon":
        """The same polygon with vertices ordered counterclockwise."""
        if signed_area(self.vertices) >= 0:
            return OrientedPolygon(self.vertices, COUNTERCLOCKWISE)
        return OrientedPolygon(self.vertices[::-1].copy(), COUNTERCLOCKWISE)

    def orientation_consistent(self) -> bool:
        return (self.signed_area > 0) == (self.orientation == COUNTERCLOCKWISE)

    def is_simple(self, tol: float = 0.0) -> bool:
        return not polygon_self_intersections(self.vertices, tol)

    def bounding_box(self) -> tuple[float, float, float, float]:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])


def point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from points (M, 2) to segments a[k] b[k] (K, 2); returns (M, K)."""
    points = np.asarray(points, dtype=float)[:, None, :]
    d = b - a
    denom = np.einsum("ij,ij->i", d, d)
    denom = np.where(denom == 0, 1.0, denom)
    t = np.clip(np.einsum("mkj,kj->mk", points - a, d) / denom, 0.0, 1.0)
    nearest = a + t[..., None] * d
    return np.linalg.norm(points - nearest, axis=-1)


def distance_to_polyline(points, polyline, closed: bool = False) -> np.ndarray:
    """Distance from each point to a polyline, or to a polygon when closed."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    line = np.asarray(polyline, dtype=float)
    if closed:
        line = np.vstack([line, line[:1]])
    if len(line) == 1:
        return np.linalg.norm(points - line[0], axis=-1)
    a, b = line[:-1], line[1:]
    out = np.full(len(points), np.inf)
    for start in range(0, len(points), BLOCK):
        chunk = points[start : start + BLOCK]
        for k in range(0, len(a), BLOCK):
            d = point_segment_distance(chunk, a[k : k + BLOCK], b[k : k + BLOCK])
            out[start : start + BLOCK] = np.minimum(out[start : start + BLOCK], d.min(axis=1))
    return out


def winding_numbers(vertices, points) -> np.ndarray:
    """Winding number of a closed polygon around each point."""
    v = np.asarray(vertices, dtype=float)
    w = np.roll(v, -1, axis=0)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    result = np.zeros(len(points), dtype=int)
    for start in range(0, len(points), BLOCK):
        p = points[start : start + BLOCK, None, :]
        left = is_left(p, v, w)
        upward = (v[:, 1] <= p[..., 1]) & (w[:, 1] > p[..., 1]) & (left > 0)
        downward = (v[:, 1] > p[..., 1]) & (w[:, 1] <= p[..., 1]) & (left < 0)
        result[start : start + BLOCK] = upward.sum(axis=1) - downward.sum(axis=1)
    return result


def classify_points(vertices, points, band: float) -> np.ndarray:
    """Labels each point INSIDE, OUTSIDE or BOUNDARY (within band of an edge)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    inside = winding_numbers(vertices, points) != 0
    near = distance_to_polyline(points, vertices, closed=True) <= band
    labels = np.where(inside, INSIDE, OUTSIDE).astype(object)
    labels[near] = BOUNDARY
    return labels


@dataclass(frozen=True)
class SegmentCrossing:
    """Proper crossing of segment i of one polyline with segment j of another.

    Attributes:
        i, j: Segment indices.
        s, u: Fractions along segment i and segment j.
        point: The crossing point.
        sin_angle: Sine of the angle from segment i to segment j.
    """

    i: int
    j: int
    s: float
    u: float
    point: np.ndarray
    sin_angle: float


def segment_crossings(
    a_line, b_line, skip=None
) -> list[SegmentCrossing]:
    """All crossings between the segments of two polylines.

    Args:
        a_line: (N, 2) polyline.
        b_line: (M, 2) polyline.
        skip: Optional predicate skip(i, j) excluding segment pairs.

    Returns:
        Crossings sorted by (i, s). Collinear overlaps are not reported.
    """
    a = np.asarray(a_line, dtype=float)
    b = np.asarray(b_line, dtype=float)
    if len(a) < 2 or len(b) < 2:
        return []
    a0, a1 = a[:-1], a[1:]
    b0, b1 = b[:-1], b[1:]
    a_lo, a_hi = np.minimum(a0, a1), np.maximum(a0, a1)
    b_lo, b_hi = np.minimum(b0, b1), np.maximum(b0, b1)
    found = []
    for i0 in range(0, len(a0), BLOCK):
        sl_a = slice(i0, i0 + BLOCK)
        for j0 in range(0, len(b0), BLOCK):
            sl_b = slice(j0, j0 + BLOCK)
            boxes = (
                (a_lo[sl_a, None, 0] <= b_hi[None, sl_b, 0])
                & (b_lo[None, sl_b, 0] <= a_hi[sl_a, None, 0])
                & (a_lo[sl_a, None, 1] <= b_hi[None, sl_b, 1])
                & (b_lo[None, sl_b, 1] <= a_hi[sl_a, None, 1])
            )
            ii, jj = np.nonzero(boxes)
            if len(ii) == 0:
                continue
            ii += i0
            jj += j0
            r = a1[ii] - a0[ii]
            q = b1[jj] - b0[jj]
            denom = cross(r, q)
            offset = b0[jj] - a0[ii]
            with np.errstate(divide="ignore", invalid="ignore"):
                s = cross(offset, q) / denom
                u = cross(offset, r) / denom
            hit = (denom != 0) & (s >= 0) & (s <= 1) & (u >= 0) & (u <= 1)
            norms = np.linalg.norm(r, axis=1) * np.linalg.norm(q, axis=1)
            for k in np.flatnonzero(hit):
                i, j = int(ii[k]), int(jj[k])
                if skip is not None and skip(i, j):
                    continue
                found.append(
                    SegmentCrossing(
                        i, j, float(s[k]), float(u[k]),
                        a0[i] + s[k] * r[k],
                        float(denom[k] / norms[k]) if norms[k] > 0 else 0.0,
                    )
                )
    found.sort(key=lambda c: (c.i, c.s))
    return found


def polygon_self_intersections(vertices, tol: float = 0.0) -> list[SegmentCrossing]:
    """Crossings between non-adjacent edges of a closed polygon."""
    closed = np.vstack([vertices, np.asarray(vertices)[:1]])
    count = len(closed) - 1

    def adjacent(i, j):
        return abs(i - j) <= 1 or {i, j} == {0, count - 1}

    crossings = segment_crossings(closed, closed, skip=lambda i, j: i >= j or adjacent(i, j))
    if tol > 0:
        crossings = [c for c in crossings if tol < c.s < 1 - tol or tol < c.u < 1 - tol]
    return crossings


def offset_polygon(vertices, distance: float) -> np.ndarray:
    """Offsets a counterclockwise polygon along its outward normals.

    Positive distances dilate, negative distances erode. Corners use miter
    joins, beveled when the miter would exceed MITER_LIMIT offsets.
    """
    v = drop_duplicates(np.asarray(vertices, dtype=float))
    if len(v) > 1 and np.array_equal(v[0], v[-1]):
        v = v[:-1]
    prev_edge = v - np.roll(v, 1, axis=0)
    next_edge = np.roll(v, -1, axis=0) - v
    n_prev = np.stack([prev_edge[:, 1], -prev_edge[:, 0]], axis=-1)
    n_prev /= np.linalg.norm(n_prev, axis=1, keepdims=True)
    n_next = np.stack([next_edge[:, 1], -next_edge[:, 0]], axis=-1)
    n_next /= np.linalg.norm(n_next, axis=1, keepdims=True)
    out = []
    for k in range(len(v)):
        cosine = float(np.dot(n_prev[k], n_next[k]))
        denom = 1.0 + cosine
        if denom > 2.0 / MITER_LIMIT**2:
            out.append(v[k] + distance * (n_prev[k] + n_next[k]) / denom)
        else:
            out.append(v[k] + distance * n_prev[k])
            out.append(v[k] + distance * n_next[k])
    return np.array(out)


def resample(polyline, spacing: float) -> np.ndarray:
    """Inserts points so no segment is longer than spacing."""
    p = np.asarray(polyline, dtype=float)
    out = [p[0]]
    for a, b in zip(p[:-1], p[1:]):
        pieces = max(1, int(math.ceil(np.linalg.norm(b - a) / spacing)))
        for k in range(1, pieces + 1):
            out.append(a + (b - a) * (k / pieces))
    return np.array(out)


def nearest_vertex(polyline, point) -> tuple[int, float]:
    d = np.linalg.norm(np.asarray(polyline, dtype=float) - np.asarray(point, dtype=float), axis=1)
    k = int(np.argmin(d))
    return k, float(d[k])


def interpolate(points: np.ndarray, params: np.ndarray, t: float) -> Optional[np.ndarray]:
    """Piecewise-linear point at parameter t along increasing params."""
    if t < params[0] or t > params[-1]:
        return None
    k = int(np.searchsorted(params, t, side="right")) - 1
    k = min(max(k, 0), len(params) - 2)
    span = params[k + 1] - params[k]
    w = 0.0 if span == 0 else (t - params[k]) / span
    return points[k] + w * (points[k + 1] - points[k])
