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


 Deterministic SVG phase portraits and CSV branch exports.

 Figures are drawn with matplotlib on the Agg backend. Every artist carries a
 gid, so the SVG groups are addressable by id: "cell", "branch-<name>",
 "fixed-point-<i>-<classification>", "eigen-u", "eigen-s" and "cell-label".
 """

from __future__ import annotations

import csv
import io
from typing import Iterable, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from homcell.fixed_points import FixedPointRecord  # noqa: E402
from homcell.homoclinic import HomoclinicCell  # noqa: E402
from homcell.manifolds import STABLE, ManifoldBranch, branch_rows  # noqa: E402

DPI = 100
# Fixed salt and no date keep the SVG byte-identical between runs.
SVG_RC = {"svg.hashsalt": "homcell", "svg.fonttype": "none"}
SVG_METADATA = {"Date": None}

UNSTABLE_COLOR = "#c0392b"
STABLE_COLOR = "#2471a3"
CELL_FACE = "#f5cba7"
CELL_EDGE = "#7e5109"
EIGEN_COLOR = "#1e8449"

# classification -> (marker, face color)
GLYPHS = {
    "direct_saddle": ("x", "none"),
    "twisted_saddle": ("+", "none"),
    "sink": ("o", "#000000"),
    "source": ("o", "#ffffff"),
    "elliptic": ("o", "#f1c40f"),
    "nonsimple": ("s", "#95a5a6"),
}

Z_CELL, Z_BRANCH, Z_EIGEN, Z_POINT = 1, 2, 3, 4


def _figure(size: int):
    fig, ax = plt.subplots(figsize=(size / DPI, size / DPI), dpi=DPI)
    ax.set_aspect("equal")
    ax.set_axis_off()
    ax.margins(0.05)
    fig.subplots_adjust(left=0.0, right=1.0, bottom=0.0, top=1.0)
    return fig, ax


def _to_svg(fig) -> str:
    buf = io.StringIO()
    try:
        fig.savefig(buf, format="svg", metadata=SVG_METADATA)
    finally:
        plt.close(fig)
    return buf.getvalue()


def _glyph(ax, record: FixedPointRecord, i: int) -> None:
    marker, face = GLYPHS.get(record.classification, ("o", "none"))
    x, y = record.location
    ax.plot(
        [x], [y],
        linestyle="none",
        marker=marker,
        markersize=7,
        markerfacecolor=face,
        markeredgecolor="#000000",
        zorder=Z_POINT,
        gid=f"fixed-point-{i}-{record.classification}",
    )


def _cell_patch(ax, cell: HomoclinicCell) -> None:
    ax.add_patch(
        Polygon(
            cell.polygon.vertices,
            closed=True,
            facecolor=CELL_FACE,
            edgecolor=CELL_EDGE,
            alpha=0.6,
            linewidth=0.5,
            zorder=Z_CELL,
            gid="cell",
        )
    )


def render_portrait(
    branches: Iterable[ManifoldBranch],
    cell: Optional[HomoclinicCell],
    fixed_points: Sequence[FixedPointRecord],
    size: int = 600,
) -> str:
    """SVG of the branches, the shaded cell and glyph-coded fixed points.

    Unstable branches are stroked in UNSTABLE_COLOR, stable ones in
    STABLE_COLOR.

    Raises:
        ValueError: nothing to draw.
    """
    branches = list(branches)
    if not branches and cell is None and not fixed_points:
        raise ValueError("a portrait needs at least one branch, cell or fixed point")
    with matplotlib.rc_context(SVG_RC):
        fig, ax = _figure(size)
        if cell is not None:
            _cell_patch(ax, cell)
        for b in branches:
            ax.plot(
                b.points[:, 0], b.points[:, 1],
                color=STABLE_COLOR if b.kind == STABLE else UNSTABLE_COLOR,
                linewidth=1.0,
                zorder=Z_BRANCH,
                gid=f"branch-{b.name}",
            )
        for i, record in enumerate(fixed_points):
            _glyph(ax, record, i)
        return _to_svg(fig)


def render_cell(cell: HomoclinicCell, size: int = 400) -> str:
    """SVG of one cell: loop, shaded interior and the eigendirections at p."""
    loop = cell.loop
    vertices = cell.polygon.vertices
    reach = 0.1 * float(np.max(vertices.max(axis=0) - vertices.min(axis=0)))
    p = loop.saddle.location
    with matplotlib.rc_context(SVG_RC):
        fig, ax = _figure(size)
        _cell_patch(ax, cell)
        ax.plot(loop.j_u[:, 0], loop.j_u[:, 1], color=UNSTABLE_COLOR, zorder=Z_BRANCH, gid="loop-unstable")
        ax.plot(loop.j_s[:, 0], loop.j_s[:, 1], color=STABLE_COLOR, zorder=Z_BRANCH, gid="loop-stable")
        for name, direction in (("u", loop.u_direction), ("s", loop.s_direction)):
            tip = p + reach * np.asarray(direction)
            ax.plot([p[0], tip[0]], [p[1], tip[1]], color=EIGEN_COLOR, linewidth=1.5,
                    zorder=Z_EIGEN, gid=f"eigen-{name}")
        _glyph(ax, loop.saddle, 0)
        ax.text(0.02, 0.98, f"{cell.sign} cell, rho = {cell.rho}", transform=ax.transAxes,
                va="top", ha="left", gid="cell-label")
        return _to_svg(fig)


def write_branch_csv(path: str, branch: ManifoldBranch) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y"])
        for t, x, y in branch_rows(branch):
            writer.writerow([repr(t), repr(x), repr(y)])
