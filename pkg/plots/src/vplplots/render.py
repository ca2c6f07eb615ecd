"""
Figure rendering from loaded artifacts.

Panels are arranged rows-by-l, columns-by-component (unperturbed, first
order, total).  Densities use a sequential colormap ending in red with a
shared normalization per row; phase maps use a cyclic colormap; nodal
figures trace the Re (blue) and Im (red) zero contours with black dots
on located zeros.  Rendering never recomputes physics, and all layout
engine inputs are pinned so byte-identical inputs produce byte-identical
image files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .artifacts import ArtifactError, check_consistent_grids, load_map, load_nodal, load_zeros

DENSITY_CMAP = "YlOrRd"
PHASE_CMAP = "twilight"
_PANEL_TITLES = {"zeroth": "unperturbed", "first": "first order", "total": "total"}


@dataclass
class FigureRequest:
    """One figure: a grid of map panels plus optional overlays."""

    rows: list  # list of dicts: {"label": str, "panels": [paths]}
    out_path: str
    kind: str = "density"  # density | phase | nodal
    zeros_paths: dict = field(default_factory=dict)  # row label -> path
    nodal_paths: dict = field(default_factory=dict)  # row label -> path
    dpi: int = 130

    def __post_init__(self):
        if not self.rows:
            raise ArtifactError("figure request lists no rows")
        n = len(self.rows[0]["panels"])
        if any(len(r["panels"]) != n for r in self.rows):
            raise ArtifactError("rows list different panel counts")


def _new_figure(nrows, ncols):
    fig, axes = plt.subplots(
        nrows, ncols,
        figsize=(3.0 * ncols, 2.6 * nrows),
        squeeze=False,
        constrained_layout=True,
    )
    return fig, axes


def _save(fig, path, dpi):
    # constant metadata keeps the PNG byte-reproducible
    fig.savefig(path, dpi=dpi, metadata={"Software": "vpl-plots"})
    plt.close(fig)


def render_density(request: FigureRequest):
    """Heat-map panels of |psi|^2 with shared per-row normalization."""
    loaded = [[load_map(p) for p in row["panels"]] for row in request.rows]
    for row_maps in loaded:
        check_consistent_grids(row_maps)
    fig, axes = _new_figure(len(loaded), len(loaded[0]))
    for i, (row, row_maps) in enumerate(zip(request.rows, loaded)):
        vmax = max(float(np.abs(m.values).max() ** 2) for m in row_maps)
        for j, m in enumerate(row_maps):
            ax = axes[i][j]
            ax.imshow(
                np.abs(m.values) ** 2,
                origin="lower",
                extent=m.extent,
                cmap=DENSITY_CMAP,
                vmin=0.0,
                vmax=vmax,
                interpolation="nearest",
            )
            which = m.grid.get("which", "")
            if i == 0:
                ax.set_title(_PANEL_TITLES.get(which, which))
            if j == 0:
                ax.set_ylabel(f"{row['label']}\ny (a.u.)")
            ax.set_xlabel("x (a.u.)")
    _save(fig, request.out_path, request.dpi)
    return request.out_path


def render_phase(request: FigureRequest):
    """Cyclic-colormap panels of arg(psi)."""
    loaded = [[load_map(p) for p in row["panels"]] for row in request.rows]
    for row_maps in loaded:
        check_consistent_grids(row_maps)
    fig, axes = _new_figure(len(loaded), len(loaded[0]))
    for i, (row, row_maps) in enumerate(zip(request.rows, loaded)):
        for j, m in enumerate(row_maps):
            ax = axes[i][j]
            ax.imshow(
                np.angle(m.values),
                origin="lower",
                extent=m.extent,
                cmap=PHASE_CMAP,
                vmin=-np.pi,
                vmax=np.pi,
                interpolation="nearest",
            )
            which = m.grid.get("which", "")
            if i == 0:
                ax.set_title(_PANEL_TITLES.get(which, which))
            if j == 0:
                ax.set_ylabel(f"{row['label']}\ny (a.u.)")
            ax.set_xlabel("x (a.u.)")
    _save(fig, request.out_path, request.dpi)
    return request.out_path


def render_nodal(request: FigureRequest):
    """Blue/red zero contours of Re/Im with black dots at located zeros.

    Returns (path, markers_drawn, markers_clipped); clipped zeros are
    counted into the caption text rather than silently dropped.
    """
    fig, axes = _new_figure(len(request.rows), 1)
    total_drawn = total_clipped = 0
    for i, row in enumerate(request.rows):
        ax = axes[i][0]
        nodal = load_nodal(request.nodal_paths[row["label"]])
        extent = None
        if row["panels"]:
            m = load_map(row["panels"][0])
            extent = m.extent
        for part, color in (("real", "tab:blue"), ("imag", "tab:red")):
            for poly in nodal[part]:
                arr = np.asarray(poly)
                if arr.size:
                    ax.plot(arr[:, 0], arr[:, 1], color=color, linewidth=0.7)
        clipped = 0
        if row["label"] in request.zeros_paths:
            zeros = load_zeros(request.zeros_paths[row["label"]])["zeros"]
            for z in zeros:
                if extent and not (
                    extent[0] <= z["x"] <= extent[1] and extent[2] <= z["y"] <= extent[3]
                ):
                    clipped += 1
                    continue
                ax.plot([z["x"]], [z["y"]], "ko", markersize=4)
                ax.annotate(
                    f"{z['charge']:+d}", (z["x"], z["y"]),
                    textcoords="offset points", xytext=(4, 4), fontsize=7,
                )
                total_drawn += 1
        total_clipped += clipped
        caption = row["label"] + (f" ({clipped} zeros outside view)" if clipped else "")
        ax.set_ylabel(caption + "\ny (a.u.)")
        ax.set_xlabel("x (a.u.)")
        if extent:
            ax.set_xlim(extent[0], extent[1])
            ax.set_ylim(extent[2], extent[3])
        ax.set_aspect("equal")
    _save(fig, request.out_path, request.dpi)
    return request.out_path, total_drawn, total_clipped
