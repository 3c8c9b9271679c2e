"""Deterministic SVG renderings of the instance space and per-config footprints."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.colors import ListedColormap
from matplotlib.figure import Figure
from matplotlib.lines import Line2D

from .selection.footprint import NONE_LABEL, FootprintModel

GRID = 120
NONE_COLOUR = "#d9d9d9"
MARKERS = ("o", "s", "^", "D", "v", "P", "X", "<", ">", "h")
_RC = {
    "svg.hashsalt": "remodkit",
    "svg.fonttype": "none",
    "path.simplify": False,
    "font.family": "DejaVu Sans",
}


def _palette(n: int) -> list:
    cmap = matplotlib.colormaps["tab20"]
    return [cmap(i % 20) for i in range(n)]


def _grid(points: np.ndarray, grid: int = GRID):
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = np.maximum(0.1 * (hi - lo), 0.5)
    lo, hi = lo - pad, hi + pad
    gx = np.linspace(lo[0], hi[0], grid)
    gy = np.linspace(lo[1], hi[1], grid)
    xx, yy = np.meshgrid(gx, gy)
    return xx, yy, (lo[0], hi[0], lo[1], hi[1])


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    with path.open("wb") as fh:
        FigureCanvasSVG(fig).print_svg(fh, metadata={"Date": None, "Creator": None})
    return path


def _style_axes(ax, extent, title: str):
    ax.set_xlim(extent[0], extent[1])
    ax.set_ylim(extent[2], extent[3])
    ax.set_xlabel("z_1")
    ax.set_ylabel("z_2")
    ax.set_title(title)


def _tag_legend(legend, names: Sequence[str]):
    for text, name in zip(legend.get_texts(), names):
        text.set_gid(f"legend-entry-{name}")


def plot_selection_map(model: FootprintModel, points, best_configs: Sequence[str], path) -> Path:
    """Predicted best configuration over the plane, with instances coloured by their actual best.

    Regions where no configuration is predicted good are drawn grey and
    labelled "None" in the title only. The legend lists every configuration
    that appears as a point colour or a region.
    """
    pts = np.asarray(points, dtype=float)
    names = model.configs
    colours = _palette(len(names))
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(7.5, 6.0))
        ax = fig.add_subplot(1, 1, 1)
        xx, yy, extent = _grid(pts)
        chosen = model.select(np.column_stack([xx.ravel(), yy.ravel()]))
        code = np.array([names.index(c) + 1 if c != NONE_LABEL else 0 for c in chosen]).reshape(xx.shape)
        cmap = ListedColormap([NONE_COLOUR] + [tuple(c[:3]) + (0.35,) for c in colours])
        ax.imshow(code, origin="lower", extent=extent, cmap=cmap, vmin=0, vmax=len(names),
                  interpolation="nearest", aspect="auto")
        present = sorted(set(best_configs) | {c for c in chosen if c != NONE_LABEL})
        handles = []
        for name in present:
            j = names.index(name)
            mask = np.array([b == name for b in best_configs], dtype=bool)
            marker = MARKERS[j % len(MARKERS)]
            if mask.any():
                ax.scatter(pts[mask, 0], pts[mask, 1], color=colours[j], marker=marker,
                           edgecolors="black", linewidths=0.5, s=36, zorder=3)
            handles.append(Line2D([], [], color=colours[j], marker=marker, linestyle="",
                                  markeredgecolor="black", label=name))
        has_none = NONE_LABEL in chosen
        _style_axes(ax, extent, "Selection map" + (" (grey: None)" if has_none else ""))
        if handles:
            legend = ax.legend(handles=handles, loc="center left", bbox_to_anchor=(1.02, 0.5),
                               fontsize=7, frameon=False)
            _tag_legend(legend, present)
        fig.subplots_adjust(left=0.1, right=0.68)
        return _save(fig, path)


def plot_config_footprint(model: FootprintModel, config: str, points, good, path) -> Path:
    """Good/bad instances for one configuration over its predicted-good region."""
    pts = np.asarray(points, dtype=float)
    good = np.asarray(good, dtype=bool)
    fp = model.footprints[config]
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(6.0, 5.0))
        ax = fig.add_subplot(1, 1, 1)
        xx, yy, extent = _grid(pts)
        dv = fp.classifier.decision_function(np.column_stack([xx.ravel(), yy.ravel()])).reshape(xx.shape)
        region = (dv > 0).astype(int)
        ax.imshow(region, origin="lower", extent=extent, cmap=ListedColormap(["#ffffff", "#c6e2c6"]),
                  vmin=0, vmax=1, interpolation="nearest", aspect="auto")
        if dv.min() < 0 < dv.max():
            ax.contour(xx, yy, dv, levels=[0.0], colors="#2f6f2f", linewidths=1.0)
        if good.any():
            ax.scatter(pts[good, 0], pts[good, 1], color="#2ca02c", marker="o",
                       edgecolors="black", linewidths=0.5, s=36, zorder=3)
        if (~good).any():
            ax.scatter(pts[~good, 0], pts[~good, 1], color="#7f7f7f", marker="x", s=36, zorder=3)
        handles = [
            Line2D([], [], color="#2ca02c", marker="o", linestyle="", markeredgecolor="black", label="good"),
            Line2D([], [], color="#7f7f7f", marker="x", linestyle="", label="bad"),
        ]
        _style_axes(ax, extent, f"{config}: accuracy {fp.accuracy:.1f}%")
        legend = ax.legend(handles=handles, loc="upper right", fontsize=8)
        _tag_legend(legend, ["good", "bad"])
        return _save(fig, path)
