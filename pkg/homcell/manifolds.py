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

 Stable and unstable branches of saddles, grown from a fundamental domain.
 """

from __future__ import annotations

import concurrent.futures
import dataclasses
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from homcell import geometry
from homcell.config import DEFAULT_GROWTH, GrowthParams, max_threads
from homcell.errors import (
    HomcellError,
    LeftWorkingRectangle,
    NoInverse,
    NotASaddle,
    OutOfRange,
    RefinementExhausted,
)
from homcell.fixed_points import TWISTED_SADDLE, FixedPointRecord
from homcell.map_model import SmoothPlanarMap

STABLE = "stable"
UNSTABLE = "unstable"
PLUS = "plus"
MINUS = "minus"
BRANCH_KEYS = ((UNSTABLE, PLUS), (UNSTABLE, MINUS), (STABLE, PLUS), (STABLE, MINUS))

SEED_POINTS = 16
MIN_DELTA = 1e-8
MAX_DELTA = 1e-3


@dataclass
class ManifoldBranch:
    """One branch of W_u or W_s at a saddle, as a parametrized polyline.

    The seed piece [p, q] carries t in [0, 1] and the seed fundamental domain
    [q, g(q)] carries t in [1, 2], affine in arclength. Afterwards the image of a
    vertex with parameter t is the vertex with parameter t + 1, where g is f^m
    for unstable branches and f^-m for stable ones.

    Attributes:
        saddle: The saddle record.
        kind: STABLE or UNSTABLE.
        side: PLUS or MINUS; PLUS follows the eigenvector with positive x part.
        eigenvector: Unit eigenvector of the branch direction.
        eigenvalue: Eigenvalue of Df^m along the branch.
        points: (N, 2) polyline starting at the saddle.
        params: Parallel increasing parameters, params[0] == 0.
        iterate: m, the power of f the branch is grown for (2 for twisted saddles).
        q: Seed point.
        gq: Image of the seed point under g.
        stop_reason: Why growth ended.
    """

    saddle: FixedPointRecord
    kind: str
    side: str
    eigenvector: np.ndarray
    eigenvalue: float
    points: np.ndarray
    params: np.ndarray
    iterate: int
    q: np.ndarray
    gq: np.ndarray
    stop_reason: str = "seeded"

    @property
    def origin(self) -> np.ndarray:
        return self.saddle.location

    @property
    def arclength(self) -> float:
        return geometry.polyline_length(self.points)

    @property
    def name(self) -> str:
        return f"{self.kind}_{self.side}"

    def truncated(self, count: int, reason: str) -> "ManifoldBranch":
        return dataclasses.replace(
            self, points=self.points[:count].copy(), params=self.params[:count].copy(), stop_reason=reason
        )


def saddle_directions(f: SmoothPlanarMap, saddle: FixedPointRecord):
    """Eigen-data of Df^m at a saddle, m being the growth iterate.

    Returns:
        (m, (lambda_s, v_s), (lambda_u, v_u)) with unit eigenvectors whose
        x part is positive (or y part, for vertical vectors).

    Raises:
        NotASaddle: the record is not a direct or twisted saddle.
    """
    if not saddle.is_saddle:
        raise NotASaddle(f"{saddle.location.tolist()} is {saddle.classification}, not a saddle")
    m = saddle.period * (2 if saddle.classification == TWISTED_SADDLE else 1)
    _, jac = f.iterate_with_jacobian(saddle.location, m)
    values, vectors = np.linalg.eig(jac)
    if np.any(np.abs(values.imag) > 1e-9):
        raise NotASaddle(f"Df^{m} at {saddle.location.tolist()} has complex eigenvalues {values}")
    values = values.real
    vectors = vectors.real
    order = np.argsort(np.abs(values))

    def canonical(v):
        v = v / np.linalg.norm(v)
        if v[0] < -1e-12 or (abs(v[0]) <= 1e-12 and v[1] < 0):
            v = -v
        return v

    stable = (float(values[order[0]]), canonical(vectors[:, order[0]]))
    unstable = (float(values[order[1]]), canonical(vectors[:, order[1]]))
    if not abs(stable[0]) < 1 < abs(unstable[0]):
        raise NotASaddle(f"eigenvalues {values} of Df^{m} do not straddle the unit circle")
    return m, stable, unstable


def branch_map(f: SmoothPlanarMap, kind: str, m: int) -> Callable[[np.ndarray], np.ndarray]:
    """The map g that pushes a branch outward: f^m or f^-m."""
    if kind == UNSTABLE:
        return lambda pts: f.iterate(pts, m)

    def backward(pts):
        out = np.asarray(pts, dtype=float)
        for _ in range(m):
            out = f.invert(out)
        return out

    return backward


def seed_branch(
    f: SmoothPlanarMap,
    saddle: FixedPointRecord,
    kind: str,
    side: str,
    delta: float = DEFAULT_GROWTH.delta,
) -> ManifoldBranch:
    """Seeds a branch with its fundamental domain [q, g(q)].

    q is p + (delta/|mu|) v pushed once through g, so that q sits at distance
    delta from p along the branch, mu being the expanding eigenvalue of g.

    Raises:
        NotASaddle: the record is not a saddle.
        NoInverse: a stable branch needs an inverse that cannot be computed.
    """
    if not MIN_DELTA <= delta <= MAX_DELTA:
        raise ValueError(f"delta must lie in [{MIN_DELTA:g}, {MAX_DELTA:g}], got {delta:g}")
    if kind not in (STABLE, UNSTABLE) or side not in (PLUS, MINUS):
        raise ValueError(f"unknown branch {kind}/{side}")
    m, stable, unstable = saddle_directions(f, saddle)
    eigenvalue, v = unstable if kind == UNSTABLE else stable
    if side == MINUS:
        v = -v
    expansion = abs(eigenvalue) if kind == UNSTABLE else 1.0 / abs(eigenvalue)
    g = branch_map(f, kind, m)
    p = saddle.location
    try:
        q = g(p + (delta / expansion) * v)
        gq = g(q)
    except NoInverse:
        raise
    except HomcellError as e:
        if kind == STABLE:
            raise NoInverse(f"cannot invert f near the saddle {p.tolist()}: {e}")
        raise
    w = np.linspace(0.0, 1.0, SEED_POINTS)
    domain = q + w[:, None] * (gq - q)
    points = np.vstack([p, domain])
    params = np.concatenate([[0.0], 1.0 + w])
    logging.debug(f"Seeded {kind} {side} branch at {p.tolist()} along {v.tolist()}")
    return ManifoldBranch(saddle, kind, side, v, eigenvalue, points, params, m, q, gq)


def _lift(branch: ManifoldBranch, g, params: np.ndarray) -> np.ndarray:
    """Evaluates the branch at arbitrary parameters >= 1 by pushing the seed domain forward."""
    steps = np.maximum(np.floor(params) - 1.0, 0.0).astype(int)
    tau = params - steps
    pts = branch.q + (tau - 1.0)[:, None] * (branch.gq - branch.q)
    for step in range(int(steps.max(initial=0))):
        mask = steps > step
        pts[mask] = g(pts[mask])
    return pts


def _turns(chain: np.ndarray) -> np.ndarray:
    """Absolute turning angle at every interior vertex of a polyline."""
    e = np.diff(chain, axis=0)
    return np.abs(np.arctan2(geometry.cross(e[:-1], e[1:]), np.einsum("ij,ij->i", e[:-1], e[1:])))


def grow_branch(
    f: SmoothPlanarMap,
    branch: ManifoldBranch,
    growth: GrowthParams = DEFAULT_GROWTH,
    **overrides,
) -> ManifoldBranch:
    """Grows a seeded branch by mapping its last fundamental domain forward.

    Each image is refined by inserting parameter midpoints wherever a segment
    is longer than h_max or a vertex turns by more than alpha_max. Growth stops
    at target_arclength, when the branch returns within return_radius of the
    saddle, when the domain collapses below h_min or after max_iterations.

    Args:
        f: The map.
        branch: Output of seed_branch (or a partially grown branch).
        growth: Growth settings; keyword overrides replace single fields.

    Raises:
        RefinementExhausted: a segment needs refining below h_min. The
            partial branch is attached.
        LeftWorkingRectangle: the branch left the working rectangle. The
            part inside is attached.
    """
    growth = dataclasses.replace(growth, **overrides)
    g = branch_map(f, branch.kind, branch.iterate)
    pts, ts = branch.points.copy(), branch.params.copy()
    p = branch.origin
    k = float(np.floor(ts[-1])) - 1.0

    left_disc = bool(np.any(np.linalg.norm(pts[1:] - p, axis=1) >= growth.return_radius))

    def current(reason):
        return dataclasses.replace(branch, points=pts, params=ts, stop_reason=reason)

    for _ in range(growth.max_iterations):
        in_domain = ts >= k
        dom_t, dom_p = ts[in_domain], pts[in_domain]
        new_t = dom_t + 1.0
        new_p = g(dom_p)
        new_p[0] = pts[-1]
        while True:
            chain = np.vstack([pts[-2:-1], new_p])
            lengths = np.linalg.norm(np.diff(new_p, axis=0), axis=1)
            turns = _turns(chain)
            bad = (lengths > growth.h_max) | (turns > growth.alpha_max)
            bad[:-1] |= turns[1:] > growth.alpha_max
            bad_idx = np.flatnonzero(bad)
            if len(bad_idx) == 0:
                break
            pre_lengths = np.linalg.norm(dom_p[bad_idx + 1] - dom_p[bad_idx], axis=1)
            if np.any(pre_lengths < growth.h_min):
                raise RefinementExhausted(
                    f"{branch.kind} branch needs refinement below h_min={growth.h_min:g} "
                    f"after arclength {geometry.polyline_length(pts):.4f}",
                    partial=current("refinement_exhausted"),
                    arclength=geometry.polyline_length(pts),
                )
            mid_t = 0.5 * (new_t[bad_idx] + new_t[bad_idx + 1])
            mid_dom = _lift(branch, g, mid_t - 1.0)
            mid_new = g(mid_dom)
            new_t = np.insert(new_t, bad_idx + 1, mid_t)
            new_p = np.insert(new_p, bad_idx + 1, mid_new, axis=0)
            dom_t = np.insert(dom_t, bad_idx + 1, mid_t - 1.0)
            dom_p = np.insert(dom_p, bad_idx + 1, mid_dom, axis=0)

        outside = np.flatnonzero(~f.in_rect(new_p))
        if len(outside):
            keep = outside[0]
            pts = np.vstack([pts, new_p[1:keep]])
            ts = np.concatenate([ts, new_t[1:keep]])
            raise LeftWorkingRectangle(
                f"{branch.kind} {branch.side} branch left the working rectangle {f.rect}",
                partial=current("left_rectangle"),
            )
        pts = np.vstack([pts, new_p[1:]])
        ts = np.concatenate([ts, new_t[1:]])
        k += 1.0

        # A return only counts once the branch has been outside the return disc.
        dist = np.linalg.norm(new_p[1:] - p, axis=1)
        start = 0
        if not left_disc:
            away = np.flatnonzero(dist >= growth.return_radius)
            left_disc = len(away) > 0
            start = away[0] if left_disc else len(dist)
        returned = start + np.flatnonzero(dist[start:] < growth.return_radius)
        if len(returned):
            count = len(pts) - (len(new_p) - 1) + returned[0] + 1
            return current("returned").truncated(count, "returned")
        cum = geometry.cumulative_arclength(pts)
        if cum[-1] >= growth.target_arclength:
            count = int(np.searchsorted(cum, growth.target_arclength)) + 1
            return current("arclength").truncated(count, "arclength")
        if geometry.polyline_length(new_p) < growth.h_min:
            return current("converged")
    logging.debug(f"{branch.kind} {branch.side} branch hit max_iterations={growth.max_iterations}")
    return current("max_iterations")


def zeta(branch: ManifoldBranch, t: float) -> np.ndarray:
    """The branch parametrization; zeta(0) is the saddle.

    Raises:
        OutOfRange: t is negative or beyond the grown range.
    """
    if t == 0:
        return branch.origin.copy()
    point = geometry.interpolate(branch.points, branch.params, t)
    if point is None:
        raise OutOfRange(
            f"t={t} outside the grown range [0, {branch.params[-1]}] of the {branch.name} branch"
        )
    return point


def arc(branch: ManifoldBranch, t: float) -> np.ndarray:
    """The polyline zeta([0, t]), ending exactly at zeta(t)."""
    end = zeta(branch, t)
    count = int(np.searchsorted(branch.params, t, side="left"))
    return np.vstack([branch.points[:count], end])


def grow_manifolds(
    f: SmoothPlanarMap,
    saddle: FixedPointRecord,
    growth: GrowthParams = DEFAULT_GROWTH,
    keys=BRANCH_KEYS,
) -> dict[tuple[str, str], ManifoldBranch]:
    """Seeds and grows the requested branches of a saddle, concurrently.

    A branch whose growth ends early with RefinementExhausted or
    LeftWorkingRectangle is kept in its partial form.
    """

    def grow(key):
        kind, side = key
        seeded = seed_branch(f, saddle, kind, side, growth.delta)
        try:
            return grow_branch(f, seeded, growth)
        except RefinementExhausted as e:
            logging.warning(f"{kind} {side} branch stopped early: {e}")
            return e.partial

    with concurrent.futures.ThreadPoolExecutor(max_workers=min(len(keys), max_threads())) as pool:
        grown = list(pool.map(grow, keys))
    return dict(zip(keys, grown))


def shadow_defect(f: SmoothPlanarMap, branch: ManifoldBranch, samples: Optional[int] = None) -> float:
    """Largest distance from g(v) to the branch over vertices v with t + 1 in range.

    g is f^m for unstable branches and f^-m for stable ones.
    """
    g = branch_map(f, branch.kind, branch.iterate)
    mask = branch.params + 1.0 <= branch.params[-1]
    vertices = branch.points[mask]
    if samples is not None and len(vertices) > samples:
        vertices = vertices[np.linspace(0, len(vertices) - 1, samples).astype(int)]
    if len(vertices) == 0:
        return 0.0
    return float(np.max(geometry.distance_to_polyline(g(vertices), branch.points)))


def branch_rows(branch: ManifoldBranch) -> list[tuple[float, float, float]]:
    """(t, x, y) rows for CSV export."""
    return [(float(t), float(x), float(y)) for t, (x, y) in zip(branch.params, branch.points)]


def evaluate_branch(f: SmoothPlanarMap, branch: ManifoldBranch, params) -> np.ndarray:
    """Points of the branch at parameters in [1, t_max], computed from the seed domain.

    Unlike zeta, which interpolates between vertices, the result lies on the
    manifold to the accuracy of the seed domain and the map.
    """
    params = np.atleast_1d(np.asarray(params, dtype=float))
    if np.any(params < 1.0):
        raise OutOfRange("branch evaluation needs parameters >= 1")
    return _lift(branch, branch_map(f, branch.kind, branch.iterate), params)
