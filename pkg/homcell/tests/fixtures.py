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

Constructed maps, loops and sphere chart pairs shared by the unit tests.

Nothing here integrates an ODE, so the fixtures are cheap to build in every
test.
"""

from __future__ import annotations

import math
from types import MappingProxyType

import numpy as np

from homcell.fixed_points import DIRECT_SADDLE, FixedPointRecord
from homcell.homoclinic import HomoclinicLoop, loop_from_arcs
from homcell.map_model import SmoothPlanarMap, builtin_map
from homcell.sphere import SphereMap


def _complex_matrix(c: complex) -> np.ndarray:
    return np.array([[c.real, -c.imag], [c.imag, c.real]])


def complex_map(name: str, fn, derivative) -> SmoothPlanarMap:
    """A planar map given by a holomorphic function and its derivative."""

    def forward(points):
        points = np.asarray(points, dtype=float)
        z = fn(points[..., 0] + 1j * points[..., 1])
        return np.stack([z.real, z.imag], axis=-1)

    def jac(p):
        return _complex_matrix(complex(derivative(complex(p[0], p[1]))))

    return SmoothPlanarMap("expression", name, MappingProxyType({}), forward, jac)


def z_minus_zk(k: int) -> SmoothPlanarMap:
    """g(z) = z - z^k, whose fixed point at 0 has index k."""
    return complex_map(f"z-z^{k}", lambda z: z - z**k, lambda z: 1 - k * z ** (k - 1))


def z_plus_conj_power(k: int) -> SmoothPlanarMap:
    """g(z) = z - conj(z)^k; the fixed point at 0 has index -k."""

    def forward(points):
        points = np.asarray(points, dtype=float)
        z = points[..., 0] + 1j * points[..., 1]
        w = z - np.conj(z) ** k
        return np.stack([w.real, w.imag], axis=-1)

    def jac(p):
        h = 1e-7
        out = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            out[:, j] = (forward(np.asarray(p) + e) - forward(np.asarray(p) - e)) / (2 * h)
        return out

    return SmoothPlanarMap("expression", f"z-conj(z)^{k}", MappingProxyType({}), forward, jac)


def linear(matrix) -> SmoothPlanarMap:
    m = np.asarray(matrix, dtype=float)
    return builtin_map("linear", {"a": m[0, 0], "b": m[0, 1], "c": m[1, 0], "d": m[1, 1]})


def saddle_record(location=(0.0, 0.0)) -> FixedPointRecord:
    return FixedPointRecord(
        location=np.array(location, dtype=float),
        period=1,
        eigenvalues=(0.5 + 0j, 2.0 + 0j),
        classification=DIRECT_SADDLE,
        minimal_period=1,
        residual=0.0,
        index=-1,
    )


def _edge(a, b, count: int = 20) -> np.ndarray:
    s = np.linspace(0.0, 1.0, count + 1)[:, None]
    return (1 - s) * np.asarray(a, dtype=float) + s * np.asarray(b, dtype=float)


def _path(*corners) -> np.ndarray:
    pieces = [_edge(a, b) for a, b in zip(corners[:-1], corners[1:])]
    return np.vstack([pieces[0]] + [p[1:] for p in pieces[1:]])


def positive_square_loop(origin=(0.0, 0.0), side: float = 1.0) -> HomoclinicLoop:
    """J_u runs right then up, J_s comes back left then down: the cell fills one quadrant at p."""
    x, y = origin
    j_u = _path((x, y), (x + side, y), (x + side, y + side))
    j_s = _path((x + side, y + side), (x, y + side), (x, y))
    return loop_from_arcs(saddle_record(origin), j_u, j_s)


def negative_square_loop(side: float = 1.0) -> HomoclinicLoop:
    """An L-shaped cell filling the three quadrants at p not between the departing arcs."""
    j_u = _path((0.0, 0.0), (side, 0.0), (side, -side), (-side, -side), (-side, side), (0.0, side))
    j_s = _path((0.0, side), (0.0, 0.0))
    return loop_from_arcs(saddle_record(), j_u, j_s)


def crossing_loop() -> HomoclinicLoop:
    """A figure-eight: J_s cuts through J_u, so the loop is not simple."""
    j_u = _path((0.0, 0.0), (2.0, 0.0), (2.0, 2.0))
    j_s = _path((2.0, 2.0), (1.0, -1.0), (0.0, 1.0), (0.0, 0.0))
    return loop_from_arcs(saddle_record(), j_u, j_s)


def duffing_energy(points) -> np.ndarray:
    """H = y^2/2 - x^2/2 + x^4/4, zero on the separatrix."""
    p = np.asarray(points, dtype=float)
    x, y = p[..., 0], p[..., 1]
    return y * y / 2 - x * x / 2 + x**4 / 4


def duffing_lobe(samples: int = 400) -> np.ndarray:
    """The right separatrix lobe x = sqrt(2) sech(s), y = dx/ds, counterclockwise from p."""
    s = np.linspace(-12.0, 12.0, samples)
    x = math.sqrt(2.0) / np.cosh(s)
    y = -math.sqrt(2.0) * np.tanh(s) / np.cosh(s)
    # Traversed with decreasing s so the lobe is counterclockwise.
    return np.stack([x, y], axis=-1)[::-1]


def sphere_from_complex(c: complex, r_in: float = 2.0, r_out: float = 4.0) -> SphereMap:
    """z -> c z in the north chart; w -> w / c in the south chart."""
    return SphereMap(
        linear(_complex_matrix(c)),
        linear(_complex_matrix(1.0 / c)),
        r_in,
        r_out,
    )


def sphere_rotation(theta: float = 0.7) -> SphereMap:
    return sphere_from_complex(complex(math.cos(theta), math.sin(theta)))


def sphere_dilation(scale: float = 2.0) -> SphereMap:
    return sphere_from_complex(complex(scale, 0.0))


def sphere_spiral() -> SphereMap:
    return sphere_from_complex(1.5 * complex(math.cos(0.4), math.sin(0.4)))


def sphere_spec(c: complex) -> dict:
    inv = 1.0 / c
    return {
        "north": {"kind": "builtin", "name": "linear",
                  "params": {"a": c.real, "b": -c.imag, "c": c.imag, "d": c.real}},
        "south": {"kind": "builtin", "name": "linear",
                  "params": {"a": inv.real, "b": -inv.imag, "c": inv.imag, "d": inv.real}},
        "r_in": 2.0,
        "r_out": 4.0,
    }


def dissipative_sink_map() -> SmoothPlanarMap:
    """Contracting linear map; the origin is an attracting fixed point."""
    return builtin_map("linear", {"a": 0.5, "b": 0.0, "c": 0.0, "d": 0.4})
