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
import logging
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping, Optional

import numpy as np
from scipy.integrate import solve_ivp

from homcell import expressions
from homcell.config import DEFAULT_RECT, real, rectangle
from homcell.errors import ConfigError, IntegrationError, NoInverse

Rect = tuple[float, float, float, float]

# Dormand-Prince 5(4), the integrator behind scipy's RK45.
ODE_METHOD = "RK45"
ODE_RTOL = 1e-12
ODE_ATOL = 1e-12


@dataclass(frozen=True)
class SmoothPlanarMap:
    """An orientation-preserving C1 map of the plane.

    Attributes:
        kind: One of "builtin", "expression" or "ode_time_T".
        name: Human readable name, the zoo name for built-in maps.
        params: Real parameter table.
        forward: Vectorized evaluator taking an array of shape (..., 2).
        jacobian_fn: Evaluator of the 2x2 derivative at a single point.
        inverse: Optional vectorized evaluator of the inverse map.
        rect: Working rectangle (xmin, xmax, ymin, ymax).
    """

    kind: str
    name: str
    params: Mapping[str, float]
    forward: Callable[[np.ndarray], np.ndarray]
    jacobian_fn: Callable[[np.ndarray], np.ndarray]
    inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    rect: Rect = DEFAULT_RECT

    def __call__(self, x) -> np.ndarray:
        return eval_map(self, x)

    def map_many(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.size == 0:
            return points.copy()
        return np.asarray(self.forward(points), dtype=float)

    def iterate(self, x, n: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        for _ in range(n):
            x = self.map_many(x)
        return x

    def iterate_with_jacobian(self, x, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Returns f^n(x) and the derivative of f^n at x by the chain rule."""
        x = np.asarray(x, dtype=float)
        jac = np.eye(2)
        for _ in range(n):
            jac = jacobian(self, x) @ jac
            x = eval_map(self, x)
        return x, jac

    def invert(self, y, guess=None) -> np.ndarray:
        """Evaluates f^-1, by Newton iteration when no inverse evaluator exists."""
        y = np.asarray(y, dtype=float)
        if self.inverse is not None:
            return np.asarray(self.inverse(y), dtype=float)
        return newton_inverse(self, y, guess)

    def in_rect(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        xmin, xmax, ymin, ymax = self.rect
        return (
            (points[..., 0] >= xmin)
            & (points[..., 0] <= xmax)
            & (points[..., 1] >= ymin)
            & (points[..., 1] <= ymax)
        )


def eval_map(f: SmoothPlanarMap, x) -> np.ndarray:
    """Evaluates f at a point (or an array of points)."""
    return f.map_many(x)


def jacobian(f: SmoothPlanarMap, x) -> np.ndarray:
    """Returns the 2x2 derivative of f at the point x."""
    return np.asarray(f.jacobian_fn(np.asarray(x, dtype=float)), dtype=float)


def newton_inverse(f: SmoothPlanarMap, y: np.ndarray, guess=None, max_iter: int = 50) -> np.ndarray:
    """Solves f(x) = y by Newton iteration with the forward derivative."""
    if y.ndim > 1:
        return np.array([newton_inverse(f, row, guess, max_iter) for row in y])
    x = np.array(y if guess is None else guess, dtype=float)
    for _ in range(max_iter):
        residual = eval_map(f, x) - y
        if np.linalg.norm(residual) < 1e-13 * (1.0 + np.linalg.norm(y)):
            return x
        try:
            step = np.linalg.solve(jacobian(f, x), residual)
        except np.linalg.LinAlgError:
            raise NoInverse(f"singular derivative while inverting {f.name} at {x}")
        x = x - step
        if not np.all(np.isfinite(x)):
            break
    residual = np.linalg.norm(eval_map(f, x) - y) if np.all(np.isfinite(x)) else math.inf
    if residual < 1e-10:
        return x
    raise NoInverse(f"Newton inversion of {f.name} failed at {y} (residual {residual:.3e})")


def perturbed(f: SmoothPlanarMap, offset) -> SmoothPlanarMap:
    """Returns the map x -> f(x) + offset."""
    offset = np.asarray(offset, dtype=float)
    inverse = None
    if f.inverse is not None:
        inverse = lambda y: f.inverse(np.asarray(y, dtype=float) - offset)
    return dataclasses.replace(
        f,
        name=f"{f.name}+{offset.tolist()}",
        forward=lambda p: f.forward(p) + offset,
        inverse=inverse,
    )


def _stack(fx, fy, shape) -> np.ndarray:
    return np.stack(
        [np.broadcast_to(np.asarray(fx, dtype=float), shape),
         np.broadcast_to(np.asarray(fy, dtype=float), shape)],
        axis=-1,
    )


def _expression_jacobian(fx, fy):
    def jac(point: np.ndarray) -> np.ndarray:
        x, y = float(point[0]), float(point[1])
        along_x = (expressions.Dual(x, 1.0), expressions.Dual(y, 0.0))
        along_y = (expressions.Dual(x, 0.0), expressions.Dual(y, 1.0))
        gx = [expressions.Dual.lift(fx(*along_x)), expressions.Dual.lift(fy(*along_x))]
        gy = [expressions.Dual.lift(fx(*along_y)), expressions.Dual.lift(fy(*along_y))]
        return np.array(
            [[gx[0].dual, gy[0].dual], [gx[1].dual, gy[1].dual]], dtype=float
        )

    return jac


def make_expression_map(
    fx: str, fy: str, params: Mapping[str, float] = None, rect: Rect = DEFAULT_RECT
) -> SmoothPlanarMap:
    """Builds a map from two component expressions in x, y and the parameters."""
    params = dict(params or {})
    ast_x = expressions.parse_map_expression(fx, params)
    ast_y = expressions.parse_map_expression(fy, params)
    cx = expressions.compile_expression(ast_x, params)
    cy = expressions.compile_expression(ast_y, params)

    def forward(points: np.ndarray) -> np.ndarray:
        px, py = points[..., 0], points[..., 1]
        return _stack(cx(px, py), cy(px, py), px.shape)

    return SmoothPlanarMap(
        kind="expression",
        name=f"({fx}, {fy})",
        params=MappingProxyType(params),
        forward=forward,
        jacobian_fn=_expression_jacobian(cx, cy),
        rect=rect,
    )


@dataclass(frozen=True)
class VectorField:
    """A planar vector field given by two expressions, and its time horizon.

    Attributes:
        fx: dx/dt.
        fy: dy/dt.
        params: Parameter values referenced by the expressions.
        T: Integration horizon of the induced time-T map.
        rtol: Relative tolerance of the integrator.
        atol: Absolute tolerance of the integrator.
    """

    fx: expressions.ExpressionAst
    fy: expressions.ExpressionAst
    params: Mapping[str, float] = field(default_factory=dict)
    T: float = 1.0
    rtol: float = ODE_RTOL
    atol: float = ODE_ATOL

    @classmethod
    def parse(cls, fx: str, fy: str, params: Mapping[str, float] = None, T: float = 1.0):
        params = dict(params or {})
        return cls(
            expressions.parse_map_expression(fx, params),
            expressions.parse_map_expression(fy, params),
            params,
            T,
        )

    def compiled(self):
        cx = expressions.compile_expression(self.fx, self.params)
        cy = expressions.compile_expression(self.fy, self.params)

        def rhs(points: np.ndarray) -> np.ndarray:
            px, py = points[..., 0], points[..., 1]
            return _stack(cx(px, py), cy(px, py), px.shape)

        return rhs, _expression_jacobian(cx, cy)


def _flow(rhs, points: np.ndarray, T: float, rtol: float, atol: float) -> np.ndarray:
    """Integrates every point of a batch on its own for time T.

    Each trajectory has its own step control, so the image of a point does not
    depend on the other points of the batch.
    """
    points = np.asarray(points, dtype=float)
    flat = points.reshape(-1, 2)
    out = np.empty_like(flat)

    def field(t, state):
        return rhs(state)

    for i, y0 in enumerate(flat):
        sol = solve_ivp(field, (0.0, T), y0, method=ODE_METHOD, rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationError(f"integration of {y0} for time {T} failed: {sol.message}")
        out[i] = sol.y[:, -1]
    return out.reshape(points.shape)


def _flow_jacobian(rhs, rhs_jac, point: np.ndarray, T: float, rtol: float, atol: float) -> np.ndarray:
    """Integrates the variational equations as a 6-dimensional system."""

    def augmented(t, state):
        x = state[:2]
        phi = state[2:].reshape(2, 2)
        return np.concatenate([rhs(x), (rhs_jac(x) @ phi).reshape(-1)])

    y0 = np.concatenate([np.asarray(point, dtype=float), np.eye(2).reshape(-1)])
    sol = solve_ivp(augmented, (0.0, T), y0, method=ODE_METHOD, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(f"variational integration for time {T} failed: {sol.message}")
    return sol.y[2:, -1].reshape(2, 2)


def flow_map(
    name: str,
    kind: str,
    rhs,
    rhs_jac,
    T: float,
    params: Mapping[str, float],
    rect: Rect = DEFAULT_RECT,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
) -> SmoothPlanarMap:
    """Builds the time-T map of a vector field given as vectorized callables."""
    if T == 0:
        raise ValueError("time-T maps need T != 0")

    def backward_rhs(points):
        return -rhs(points)

    return SmoothPlanarMap(
        kind=kind,
        name=name,
        params=MappingProxyType(dict(params)),
        forward=lambda p: _flow(rhs, p, T, rtol, atol),
        jacobian_fn=lambda p: _flow_jacobian(rhs, rhs_jac, p, T, rtol, atol),
        inverse=lambda p: _flow(backward_rhs, np.asarray(p, dtype=float), T, rtol, atol),
        rect=rect,
    )


def make_time_T_map(vector_field: VectorField, T: float = None, rect: Rect = DEFAULT_RECT) -> SmoothPlanarMap:
    """Returns the time-T map of a vector field; its inverse is the time -T map."""
    T = vector_field.T if T is None else T
    rhs, rhs_jac = vector_field.compiled()
    name = f"flow[{expressions.to_text(vector_field.fx)}, {expressions.to_text(vector_field.fy)}]^{T}"
    return flow_map(
        name, "ode_time_T", rhs, rhs_jac, T, vector_field.params, rect,
        vector_field.rtol, vector_field.atol,
    )


# Built-in zoo.


@dataclass(frozen=True)
class BuiltinSpec:
    """A zoo entry.

    Attributes:
        params: Parameter names with their defaults (None when required).
        constraint: Human readable parameter constraint.
        check: Returns True when the parameters satisfy the constraint.
        build: Factory taking the completed parameter table and working rectangle.
    """

    params: Mapping[str, Optional[float]]
    constraint: str
    check: Callable[[Mapping[str, float]], bool]
    build: Callable[[Mapping[str, float], Rect], SmoothPlanarMap]


def _linear(name: str, matrix: np.ndarray, params, rect) -> SmoothPlanarMap:
    matrix = np.array(matrix, dtype=float)
    inverse_matrix = np.linalg.inv(matrix)
    return SmoothPlanarMap(
        kind="builtin",
        name=name,
        params=MappingProxyType(dict(params)),
        forward=lambda p: p @ matrix.T,
        jacobian_fn=lambda p: matrix,
        inverse=lambda p: p @ inverse_matrix.T,
        rect=rect,
    )


def _henon(name: str, a: float, b: float, params, rect) -> SmoothPlanarMap:
    # (x, y) -> (a - x^2 - b y, x) has Jacobian determinant b > 0.
    def forward(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack([a - x * x - b * y, x], axis=-1)

    def inverse(p):
        u, v = p[..., 0], p[..., 1]
        return np.stack([v, (a - v * v - u) / b], axis=-1)

    def jac(p):
        return np.array([[-2.0 * p[0], -b], [1.0, 0.0]])

    return SmoothPlanarMap(
        kind="builtin",
        name=name,
        params=MappingProxyType(dict(params)),
        forward=forward,
        jacobian_fn=jac,
        inverse=inverse,
        rect=rect,
    )


def _duffing_field(points):
    x, y = points[..., 0], points[..., 1]
    return np.stack([y, x - x**3], axis=-1)


def _duffing_field_jacobian(p):
    return np.array([[0.0, 1.0], [1.0 - 3.0 * p[0] ** 2, 0.0]])


def _blend(s, s1: float, s2: float):
    """Quintic smoothstep falling from 1 at s <= s1 to 0 at s >= s2, and d/ds."""
    tau = np.clip((s - s1) / (s2 - s1), 0.0, 1.0)
    chi = 1.0 - tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)
    dchi = -30.0 * tau**2 * (1.0 - tau) ** 2 / (s2 - s1)
    return chi, dchi


def duffing_sphere_fields(a: float, r1: float, r2: float):
    """Vector fields of the Duffing oscillator compactified on the sphere.

    Inside radius r1 the north chart field is exactly x'' = x - x^3; beyond r2 it
    is the linear field -a z, whose time-T map fixes the point at infinity as a
    source. The south chart uses w = 1/z.

    Returns:
        (north_rhs, north_jacobian, south_rhs, south_jacobian).
    """
    s1, s2 = r1 * r1, r2 * r2

    def north(points):
        x, y = points[..., 0], points[..., 1]
        chi, _ = _blend(x * x + y * y, s1, s2)
        d = _duffing_field(points)
        chi = chi[..., None]
        return chi * d - a * (1.0 - chi) * points

    def north_jac(p):
        x, y = float(p[0]), float(p[1])
        chi, dchi = _blend(x * x + y * y, s1, s2)
        grad = 2.0 * dchi * np.array([x, y])
        d = _duffing_field(np.asarray(p, dtype=float))
        return (
            chi * _duffing_field_jacobian(p)
            + np.outer(d, grad)
            + a * np.outer(p, grad)
            - a * (1.0 - chi) * np.eye(2)
        )

    def _complex_matrix(c: complex) -> np.ndarray:
        return np.array([[c.real, -c.imag], [c.imag, c.real]])

    def south(points):
        w = points[..., 0] + 1j * points[..., 1]
        far = np.abs(w) <= 1.0 / r2
        safe = np.where(far, 1.0, w)
        z = 1.0 / safe
        fz = north(np.stack([z.real, z.imag], axis=-1))
        g = -safe * safe * (fz[..., 0] + 1j * fz[..., 1])
        g = np.where(far, a * w, g)
        return np.stack([g.real, g.imag], axis=-1)

    def south_jac(p):
        w = complex(p[0], p[1])
        if abs(w) <= 1.0 / r2:
            return a * np.eye(2)
        z = 1.0 / w
        fz = north(np.array([z.real, z.imag]))
        fc = complex(fz[0], fz[1])
        dz = north_jac(np.array([z.real, z.imag]))
        return _complex_matrix(-2.0 * w * fc) + _complex_matrix(-w * w) @ dz @ _complex_matrix(
            -1.0 / (w * w)
        )

    return north, north_jac, south, south_jac


def _duffing_sphere(chart: str):
    def build(params, rect):
        north, north_jac, south, south_jac = duffing_sphere_fields(
            params["a"], params["r1"], params["r2"]
        )
        rhs, rhs_jac = (north, north_jac) if chart == "north" else (south, south_jac)
        return flow_map(f"duffing_sphere_{chart}", "builtin", rhs, rhs_jac, params["T"], params, rect)

    return build


_SPHERE_PARAMS = {"T": 0.25, "a": 1.0, "r1": 2.0, "r2": 3.0}


def _sphere_check(p) -> bool:
    return p["T"] != 0 and p["a"] > 0 and 0 < p["r1"] < p["r2"]


ZOO: Mapping[str, BuiltinSpec] = MappingProxyType(
    {
        "linear": BuiltinSpec(
            {"a": None, "b": None, "c": None, "d": None},
            "a*d - b*c > 0",
            lambda p: p["a"] * p["d"] - p["b"] * p["c"] > 0,
            lambda p, rect: _linear("linear", [[p["a"], p["b"]], [p["c"], p["d"]]], p, rect),
        ),
        "rotation": BuiltinSpec(
            {"theta": None},
            "any real theta",
            lambda p: True,
            lambda p, rect: _linear(
                "rotation",
                [[math.cos(p["theta"]), -math.sin(p["theta"])],
                 [math.sin(p["theta"]), math.cos(p["theta"])]],
                p,
                rect,
            ),
        ),
        "linear_saddle": BuiltinSpec(
            {"lambda": None, "mu": None},
            "mu > 1 > lambda > 0",
            lambda p: p["mu"] > 1 > p["lambda"] > 0,
            lambda p, rect: _linear("linear_saddle", np.diag([p["lambda"], p["mu"]]), p, rect),
        ),
        "twisted_linear_saddle": BuiltinSpec(
            {"lambda": None, "mu": None},
            "mu < -1 < lambda < 0",
            lambda p: p["mu"] < -1 < p["lambda"] < 0,
            lambda p, rect: _linear(
                "twisted_linear_saddle", np.diag([p["lambda"], p["mu"]]), p, rect
            ),
        ),
        "henon": BuiltinSpec(
            {"a": None, "b": None},
            "b > 0",
            lambda p: p["b"] > 0,
            lambda p, rect: _henon("henon", p["a"], p["b"], p, rect),
        ),
        "area_preserving_henon": BuiltinSpec(
            {"alpha": None},
            "alpha > -1",
            lambda p: p["alpha"] > -1,
            lambda p, rect: _henon("area_preserving_henon", p["alpha"], 1.0, p, rect),
        ),
        "duffing_time1": BuiltinSpec(
            {"T": 1.0},
            "T != 0",
            lambda p: p["T"] != 0,
            lambda p, rect: flow_map(
                "duffing_time1", "builtin", _duffing_field, _duffing_field_jacobian,
                p["T"], p, rect,
            ),
        ),
        "duffing_sphere_north": BuiltinSpec(
            _SPHERE_PARAMS, "T != 0, a > 0, 0 < r1 < r2", _sphere_check, _duffing_sphere("north")
        ),
        "duffing_sphere_south": BuiltinSpec(
            _SPHERE_PARAMS, "T != 0, a > 0, 0 < r1 < r2", _sphere_check, _duffing_sphere("south")
        ),
    }
)


def builtin_map(name: str, params: Mapping[str, float] = None, rect: Rect = DEFAULT_RECT) -> SmoothPlanarMap:
    """Configures a map from the built-in zoo.

    Args:
        name: Zoo name, see ZOO.
        params: Parameter table; parameters with defaults may be omitted.
        rect: Working rectangle.

    Returns:
        The configured map with its analytic Jacobian.
    """
    if name not in ZOO:
        raise ConfigError(f"unknown built-in map {name!r}; known maps are {sorted(ZOO)}")
    spec = ZOO[name]
    params = dict(params or {})
    unknown = set(params) - set(spec.params)
    if unknown:
        raise ConfigError(f"unknown parameters for {name}: {sorted(unknown)}")
    full = {}
    for key, default in spec.params.items():
        value = params.get(key, default)
        if value is None:
            raise ConfigError(f"{name} requires parameter {key!r}")
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise ConfigError(f"{name} parameter {key!r} must be a finite number, got {value!r}")
        full[key] = float(value)
    if not spec.check(full):
        raise ConfigError(f"{name} parameters out of range: need {spec.constraint}, got {full}")
    logging.debug(f"Configured built-in map {name} with {full}")
    return spec.build(full, rect)


def zoo_schema() -> dict[str, Any]:
    """Parameter schema of every zoo map, for `homcell zoo`."""
    return {
        name: {
            "params": {k: {"default": v, "required": v is None} for k, v in spec.params.items()},
            "constraint": spec.constraint,
        }
        for name, spec in sorted(ZOO.items())
    }


_MAP_KEYS = {"kind", "name", "params", "fx", "fy", "T", "rect"}


def map_from_spec(spec: Mapping[str, Any]) -> SmoothPlanarMap:
    """Builds a map from a configuration block.

    The block has the shape {"kind": "builtin"|"expression"|"ode", "name"?,
    "params"?, "fx"?, "fy"?, "T"?, "rect"?}.
    """
    if not isinstance(spec, Mapping):
        raise ConfigError("map spec must be a JSON object")
    unknown = set(spec) - _MAP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in map spec: {sorted(unknown)}")
    rect = rectangle("map rect", spec.get("rect", DEFAULT_RECT))
    kind = spec.get("kind")
    params = spec.get("params", {})
    if not isinstance(params, Mapping):
        raise ConfigError(f"map params must be a JSON object, got {params!r}")
    params = {str(k): real(f"map parameter {k!r}", v) for k, v in params.items()}
    if kind == "builtin":
        if not isinstance(spec.get("name"), str):
            raise ConfigError('builtin map spec needs "name" as text')
        return builtin_map(spec["name"], params, rect)
    if kind in ("expression", "ode"):
        for key in ("fx", "fy"):
            if not isinstance(spec.get(key), str):
                raise ConfigError(f'{kind} map spec needs "{key}" as text')
        if kind == "expression":
            return make_expression_map(spec["fx"], spec["fy"], params, rect)
        T = spec.get("T")
        if not isinstance(T, (int, float)) or isinstance(T, bool) or not math.isfinite(T) or T == 0:
            raise ConfigError(f'ode map spec needs a nonzero "T", got {T!r}')
        return make_time_T_map(VectorField.parse(spec["fx"], spec["fy"], params, float(T)), rect=rect)
    raise ConfigError(f'map kind must be "builtin", "expression" or "ode", got {kind!r}')


@dataclass
class InvariantReport:
    """Outcome of checking a map's standing invariants on a grid of sample points."""

    samples: int
    min_det: float
    max_inverse_error: Optional[float]
    max_jacobian_error: float

    @property
    def orientation_preserving(self) -> bool:
        return self.min_det > 0


def check_invariants(f: SmoothPlanarMap, samples: np.ndarray, h: float = 1e-6) -> InvariantReport:
    """Checks orientation, inverse consistency and the Jacobian at sample points.

    The Jacobian error is relative to the central finite difference with step h.
    """
    samples = np.asarray(samples, dtype=float)
    min_det = math.inf
    max_jac_err = 0.0
    for p in samples:
        jac = jacobian(f, p)
        min_det = min(min_det, float(np.linalg.det(jac)))
        fd = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            fd[:, k] = (eval_map(f, p + e) - eval_map(f, p - e)) / (2 * h)
        scale = max(1.0, float(np.max(np.abs(jac))))
        max_jac_err = max(max_jac_err, float(np.max(np.abs(fd - jac))) / scale)
    inverse_err = None
    if f.inverse is not None:
        back = f.inverse(f.map_many(samples))
        inverse_err = float(np.max(np.linalg.norm(back - samples, axis=-1)))
    return InvariantReport(len(samples), min_det, inverse_err, max_jac_err)
