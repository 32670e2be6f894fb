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

 Periodic point search by grid-seeded Newton iteration, and eigenvalue classification.
 """

from __future__ import annotations

import concurrent.futures
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from homcell.config import DEFAULT_TOLERANCES, Tolerances, max_threads
from homcell.errors import HomcellError, NewtonFailure
from homcell.map_model import SmoothPlanarMap, jacobian

DIRECT_SADDLE = "direct_saddle"
TWISTED_SADDLE = "twisted_saddle"
SINK = "sink"
SOURCE = "source"
ELLIPTIC = "elliptic"
NONSIMPLE = "nonsimple"
CLASSIFICATIONS = (DIRECT_SADDLE, TWISTED_SADDLE, SINK, SOURCE, ELLIPTIC, NONSIMPLE)

MAX_NEWTON_ITERATIONS = 50
# Backtracking halves the Newton step at most this many times.
MAX_HALVINGS = 12


@dataclass
class FixedPointRecord:
    """A point x with f^n(x) = x.

    Attributes:
        location: The point.
        period: The n in f^n.
        eigenvalues: Eigenvalues of Df^n at the point, smaller modulus first.
        classification: One of CLASSIFICATIONS.
        minimal_period: Least m dividing n with f^m(x) = x.
        residual: ||f^n(x) - x||.
        index: Fixed point index of f^n at the point, filled in by the index module.
        borderline: An eigenvalue lies within the unit-circle band.
    """

    location: np.ndarray
    period: int
    eigenvalues: tuple[complex, complex]
    classification: str
    minimal_period: int
    residual: float
    index: Optional[int] = None
    borderline: bool = False

    @property
    def is_saddle(self) -> bool:
        return self.classification in (DIRECT_SADDLE, TWISTED_SADDLE)

    def to_json(self) -> dict[str, Any]:
        out = {
            "x": float(self.location[0]),
            "y": float(self.location[1]),
            "n": self.period,
            "minimal_period": self.minimal_period,
            "eig": [[float(e.real), float(e.imag)] for e in self.eigenvalues],
            "class": self.classification,
            "residual": float(self.residual),
            "borderline": self.borderline,
        }
        if self.index is not None:
            out["index"] = int(self.index)
        return out


@dataclass
class SearchStats:
    """Audit trail of one grid-Newton sweep."""

    grid: int
    seeds: int = 0
    converged: int = 0
    failures: int = 0
    max_residual: float = 0.0
    failure_reasons: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "grid": self.grid,
            "seeds": self.seeds,
            "converged": self.converged,
            "failures": self.failures,
            "max_residual": self.max_residual,
        }


def _eigen_sorted(matrix: np.ndarray, tolerances: Tolerances) -> tuple[complex, complex]:
    eig = np.linalg.eigvals(matrix)
    eig = [complex(e.real, 0.0) if abs(e.imag) < tolerances.imaginary else complex(e) for e in eig]
    eig.sort(key=lambda e: (abs(e), e.real))
    return eig[0], eig[1]


def classify_eigenvalues(
    eigenvalues: Sequence[complex], tolerances: Tolerances = DEFAULT_TOLERANCES
) -> tuple[str, bool]:
    """Classifies a fixed point from the eigenvalues of its derivative.

    Returns:
        (classification, borderline).
    """
    lam, mu = sorted(
        (complex(e) for e in eigenvalues), key=lambda e: (abs(e), e.real)
    )
    band = tolerances.unit_circle
    if any(abs(e - 1.0) < band for e in (lam, mu)):
        return NONSIMPLE, True
    borderline = any(abs(abs(e) - 1.0) < band for e in (lam, mu))
    if borderline:
        return ELLIPTIC, True
    real = abs(lam.imag) < tolerances.imaginary and abs(mu.imag) < tolerances.imaginary
    if abs(lam) < 1.0 and abs(mu) < 1.0:
        return SINK, False
    if abs(lam) > 1.0 and abs(mu) > 1.0:
        return SOURCE, False
    if real:
        # One eigenvalue inside the circle, one outside.
        return (DIRECT_SADDLE if mu.real > 0 else TWISTED_SADDLE), False
    return ELLIPTIC, False


def classify(f: SmoothPlanarMap, rec: FixedPointRecord, tolerances: Tolerances = DEFAULT_TOLERANCES) -> str:
    """Recomputes the eigenvalues of Df^n at rec and classifies them."""
    _, jac = f.iterate_with_jacobian(rec.location, rec.period)
    eig = _eigen_sorted(jac, tolerances)
    classification, borderline = classify_eigenvalues(eig, tolerances)
    rec.eigenvalues = eig
    rec.classification = classification
    rec.borderline = borderline
    return classification


def expected_index(classification: str) -> Optional[int]:
    """Index implied by the eigenvalue class; None when 1 is an eigenvalue."""
    if classification == NONSIMPLE:
        return None
    return -1 if classification == DIRECT_SADDLE else 1


def _displacement(f: SmoothPlanarMap, n: int, x: np.ndarray) -> Optional[np.ndarray]:
    try:
        with np.errstate(all="ignore"):
            d = f.iterate(x, n) - x
    except HomcellError:
        return None
    if not np.all(np.isfinite(d)):
        return None
    return d


def newton_refine(
    f: SmoothPlanarMap,
    n: int,
    seed,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    max_iterations: int = MAX_NEWTON_ITERATIONS,
) -> np.ndarray:
    """Refines a seed to a fixed point of f^n by damped Newton iteration.

    Args:
        f: The map.
        n: Iterate to solve for.
        seed: Starting point inside the working rectangle.
        tolerances: Newton and residual targets.
        max_iterations: Newton step budget.

    Returns:
        x with ||f^n(x) - x|| below the Newton target, or below the residual
        target if the iteration stagnated there.

    Raises:
        NewtonFailure: singular derivative, divergence out of the working
            rectangle or no convergence within the budget.
    """
    if n < 1:
        raise ValueError(f"period must be positive, got {n}")
    x = np.array(seed, dtype=float)
    if not f.in_rect(x):
        raise NewtonFailure(f"seed {x} is outside the working rectangle", seed=x)
    d = _displacement(f, n, x)
    if d is None:
        raise NewtonFailure(f"f^{n} cannot be evaluated at seed {x}", seed=x)
    residual = float(np.linalg.norm(d))
    for _ in range(max_iterations):
        if residual < tolerances.newton:
            return x
        try:
            _, jac = f.iterate_with_jacobian(x, n)
        except HomcellError as e:
            raise NewtonFailure(f"derivative of f^{n} failed at {x}: {e}", seed=x)
        system = jac - np.eye(2)
        if not np.all(np.isfinite(system)) or np.linalg.cond(system) > 1e14:
            raise NewtonFailure(f"Jacobian of f^{n} - id is singular at {x}", seed=x)
        step = np.linalg.solve(system, -d)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = x + t * step
            if f.in_rect(trial):
                trial_d = _displacement(f, n, trial)
                if trial_d is not None and np.linalg.norm(trial_d) < residual:
                    break
            t *= 0.5
        else:
            if residual < tolerances.residual:
                return x
            if not f.in_rect(x + step):
                raise NewtonFailure(f"Newton iteration left the working rectangle from {seed}", seed=x)
            raise NewtonFailure(f"Newton iteration stagnated at {x} (residual {residual:.3e})", seed=x)
        x, d = trial, trial_d
        residual = float(np.linalg.norm(d))
    if residual < tolerances.residual:
        return x
    raise NewtonFailure(f"no convergence in {max_iterations} Newton steps from {seed}", seed=x)


def local_minima(residuals: np.ndarray) -> np.ndarray:
    """Flat indices of grid cells whose residual is no larger than any neighbour's."""
    padded = np.pad(residuals, 1, constant_values=np.inf)
    rows, cols = residuals.shape
    is_min = np.isfinite(residuals)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            neighbour = padded[1 + di : 1 + di + rows, 1 + dj : 1 + dj + cols]
            is_min &= residuals <= neighbour
    return np.flatnonzero(is_min)


def grid_points(region: Sequence[float], grid: int) -> np.ndarray:
    xmin, xmax, ymin, ymax = region
    xs = np.linspace(xmin, xmax, grid)
    ys = np.linspace(ymin, ymax, grid)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=-1)


def _batch_residuals(f: SmoothPlanarMap, n: int, points: np.ndarray) -> np.ndarray:
    try:
        with np.errstate(all="ignore"):
            images = f.iterate(points, n)
        r = np.linalg.norm(images - points, axis=-1)
    except HomcellError:
        # Fall back to pointwise evaluation when a singularity sits on the grid.
        r = np.array(
            [
                np.linalg.norm(d) if (d := _displacement(f, n, p)) is not None else np.inf
                for p in points
            ]
        )
    return np.where(np.isfinite(r), r, np.inf)


def minimal_period(f: SmoothPlanarMap, n: int, x: np.ndarray, tol: float) -> int:
    """Least divisor m of n with ||f^m(x) - x|| < tol."""
    for m in range(1, n + 1):
        if n % m:
            continue
        d = _displacement(f, m, x)
        if d is not None and np.linalg.norm(d) < tol:
            return m
    return n


def orbit(f: SmoothPlanarMap, x, length: int) -> np.ndarray:
    """The points x, f(x), ..., f^(length-1)(x)."""
    points = [np.asarray(x, dtype=float)]
    for _ in range(length - 1):
        points.append(f.map_many(points[-1]))
    return np.array(points)


def _dedup(points: list[np.ndarray], tol: float) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for p in sorted(points, key=lambda q: (q[0], q[1])):
        if all(np.linalg.norm(p - k) > tol for k in kept):
            kept.append(p)
    return kept


def _in_region(p: np.ndarray, region: Sequence[float], slack: float) -> bool:
    xmin, xmax, ymin, ymax = region
    return xmin - slack <= p[0] <= xmax + slack and ymin - slack <= p[1] <= ymax + slack


def make_record(
    f: SmoothPlanarMap, n: int, x: np.ndarray, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> FixedPointRecord:
    """Builds a classified record for a refined fixed point of f^n."""
    image, jac = f.iterate_with_jacobian(x, n)
    eig = _eigen_sorted(jac, tolerances)
    classification, borderline = classify_eigenvalues(eig, tolerances)
    return FixedPointRecord(
        location=np.asarray(x, dtype=float),
        period=n,
        eigenvalues=eig,
        classification=classification,
        minimal_period=minimal_period(f, n, x, max(tolerances.residual, 1e-9)),
        residual=float(np.linalg.norm(image - x)),
        borderline=borderline,
    )


def periodic_point_search(
    f: SmoothPlanarMap,
    n: int,
    region: Sequence[float],
    grid: int,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    per_orbit: bool = True,
    max_seeds: int = 400,
) -> tuple[list[FixedPointRecord], SearchStats]:
    """Grid-seeded Newton sweep for fixed points of f^n in a rectangle.

    Residuals ||f^n(x) - x|| are evaluated on the whole grid in one batch; only
    local minima seed Newton, best first.

    Args:
        f: The map.
        n: Iterate.
        region: (xmin, xmax, ymin, ymax) to search.
        grid: Points per axis.
        tolerances: Newton, residual and dedup thresholds.
        per_orbit: Report each orbit once through its lexicographically smallest
            point. When False every distinct point of every orbit is reported.
        max_seeds: Cap on Newton starts.

    Returns:
        (records sorted lexicographically, search statistics).
    """
    if grid < 2:
        raise ValueError(f"grid must be at least 2, got {grid}")
    if n < 1:
        raise ValueError(f"period must be positive, got {n}")
    stats = SearchStats(grid=grid)
    points = grid_points(region, grid)
    residuals = _batch_residuals(f, n, points).reshape(grid, grid)
    minima = local_minima(residuals)
    minima = minima[np.argsort(residuals.ravel()[minima], kind="stable")][:max_seeds]
    seeds = points[minima]
    stats.seeds = len(seeds)
    logging.debug(f"f^{n}: {len(seeds)} Newton seeds from a {grid}x{grid} grid")

    def refine(seed):
        try:
            return newton_refine(f, n, seed, tolerances), None
        except NewtonFailure as e:
            return None, type(e).__name__ if "singular" not in str(e) else "singular"

    with concurrent.futures.ThreadPoolExecutor(max_workers=max_threads()) as pool:
        outcomes = list(pool.map(refine, seeds))

    found = []
    for x, reason in outcomes:
        if x is None:
            stats.failures += 1
            stats.failure_reasons[reason] = stats.failure_reasons.get(reason, 0) + 1
            continue
        stats.converged += 1
        if _in_region(x, region, tolerances.dedup):
            found.append(x)
    found = _dedup(found, tolerances.dedup)

    records: list[FixedPointRecord] = []
    seen: list[np.ndarray] = []
    for x in found:
        if any(np.linalg.norm(x - s) <= tolerances.dedup for s in seen):
            continue
        m = minimal_period(f, n, x, max(tolerances.residual, 1e-9))
        cycle = orbit(f, x, m)
        if not np.all(f.in_rect(cycle)):
            logging.debug(f"dropping f^{n} fixed point {x}: its orbit leaves the working rectangle")
            continue
        seen.extend(cycle)
        members = [p for p in cycle if _in_region(p, region, tolerances.dedup)]
        if per_orbit:
            members = [min(members, key=lambda q: (q[0], q[1]))]
        for p in members:
            try:
                p = newton_refine(f, n, p, tolerances)
            except NewtonFailure:
                pass
            records.append(make_record(f, n, p, tolerances))

    records.sort(key=lambda r: (r.location[0], r.location[1]))
    stats.max_residual = max((r.residual for r in records), default=0.0)
    logging.debug(f"f^{n}: {len(records)} periodic point records, max residual {stats.max_residual:.3e}")
    return records, stats


def find_periodic_points(
    f: SmoothPlanarMap,
    n: int,
    region: Sequence[float],
    grid: int,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    per_orbit: bool = True,
) -> list[FixedPointRecord]:
    """Returns the deduplicated fixed points of f^n found in region."""
    records, _ = periodic_point_search(f, n, region, grid, tolerances, per_orbit)
    return records


def find_fixed_points(
    f: SmoothPlanarMap, region: Sequence[float], grid: int, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> list[FixedPointRecord]:
    return find_periodic_points(f, 1, region, grid, tolerances)


def saddles(records: Sequence[FixedPointRecord]) -> list[FixedPointRecord]:
    return [r for r in records if r.is_saddle and r.minimal_period == 1]


def nearest(records: Sequence[FixedPointRecord], point) -> Optional[FixedPointRecord]:
    if not records:
        return None
    point = np.asarray(point, dtype=float)
    return min(records, key=lambda r: math.dist(r.location, point))
