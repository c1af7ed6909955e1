"""Matplotlib figures written next to the pipeline outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from mpl_toolkits.mplot3d.art3d import Line3DCollection, Poly3DCollection  # noqa: E402

from .complex import CellComplex  # noqa: E402
from .minsurf import Surface  # noqa: E402
from .paths import Cycle  # noqa: E402

# fixed metadata keeps the PNG bytes stable across runs
_META = {"Software": None}

plt.rcParams.update({
    "font.size": 9,
    "axes.titlesize": 9,
    "figure.dpi": 100,
    "savefig.bbox": "tight",
})


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def _cube_axes(ax, k: CellComplex):
    ext = k.cuboid.extents
    ax.set_xlim(0, ext[0])
    ax.set_ylim(0, ext[1])
    ax.set_zlim(0, ext[2])
    ax.set_box_aspect(ext)
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_zticks([])


def plot_surface_generation(k: CellComplex, h: Cycle, s: Surface, path: str | Path, extra: Surface | None = None) -> Path:
    """Three panels: boundary wireframe of the diagram, the input cycle, the surface."""
    fig = plt.figure(figsize=(10, 3.4))
    barcs = k.boundary_arc_mask()
    segs = k.vertices[k.arcs[barcs]]
    cyc = k.vertices[list(h.vertices) + [h.vertices[0]]]

    ax = fig.add_subplot(1, 3, 1, projection="3d")
    ax.add_collection3d(Line3DCollection(segs, colors="0.3", linewidths=0.3))
    ax.set_title("bounded diagram")
    _cube_axes(ax, k)

    ax = fig.add_subplot(1, 3, 2, projection="3d")
    ax.add_collection3d(Line3DCollection(segs, colors="0.8", linewidths=0.3))
    ax.plot(cyc[:, 0], cyc[:, 1], cyc[:, 2], color="tab:red", lw=1.5)
    ax.set_title("boundary cycle")
    _cube_axes(ax, k)

    ax = fig.add_subplot(1, 3, 3, projection="3d")
    for surf, color in ((s, "tab:blue"), (extra, "tab:orange")):
        if surf is None:
            continue
        polys = [k.vertices[k.facet_vertices(int(f))] for f in surf.facets]
        ax.add_collection3d(Poly3DCollection(polys, facecolor=color, edgecolor="k", linewidths=0.2, alpha=0.8))
    ax.plot(cyc[:, 0], cyc[:, 1], cyc[:, 2], color="tab:red", lw=1.0)
    ax.set_title(f"minimum-weight surface ({len(s.facets)} facets)")
    _cube_axes(ax, k)
    return _save(fig, path)


def plot_slices(labels: np.ndarray, gt: np.ndarray, image: np.ndarray | None, path: str | Path, x: int | None = None) -> Path:
    """Slice view: labels with the crack overlaid, ground truth, embedded image."""
    x = labels.shape[0] // 2 if x is None else x
    panels = 3 if image is not None else 2
    fig, axes = plt.subplots(1, panels, figsize=(3.2 * panels, 3.2))
    lab = labels[x].astype(float)
    axes[0].imshow(lab.T, origin="lower", cmap="tab20", interpolation="nearest")
    overlay = np.ma.masked_where(gt[x].T == 0, gt[x].T)
    axes[0].imshow(overlay, origin="lower", cmap="autumn", interpolation="nearest")
    axes[0].set_title(f"labels, slice x={x}")
    axes[1].imshow(gt[x].T, origin="lower", cmap="gray", interpolation="nearest")
    axes[1].set_title("ground truth")
    if image is not None:
        axes[2].imshow(image[x].T, origin="lower", cmap="gray", interpolation="nearest")
        axes[2].set_title("crack image")
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    return _save(fig, path)


def plot_facet_areas(areas: dict[str, np.ndarray], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for name, a in areas.items():
        if len(a):
            ax.hist(a, bins=30, histtype="step", label=f"{name} (n={len(a)})")
    ax.set_xlabel("facet area")
    ax.set_ylabel("count")
    ax.legend(frameon=False)
    return _save(fig, path)
