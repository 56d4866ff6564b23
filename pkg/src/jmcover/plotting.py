"""Matplotlib figures written to files: ECDFs against limit laws, cell pictures."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .tessellation import CellRaster, color_image  # noqa: E402


def plot_ecdfs(summaries, laws: dict, path, title: str | None = None, labels=None) -> Path:
    """Step ECDFs of standardized samples overlaid with limit CDFs."""
    fig, ax = plt.subplots(figsize=(6, 4))
    lo = min(np.nanmin(s.standardized) for s in summaries)
    hi = max(np.nanmax(s.standardized) for s in summaries)
    pad = 0.1 * (hi - lo + 1)
    grid = np.linspace(lo - pad, hi + pad, 600)
    for i, s in enumerate(summaries):
        v = s.values
        v = v[~np.isnan(v)]
        lab = labels[i] if labels else f"scale {s.scale:g} (n={len(v)})"
        ax.step(v, np.arange(1, len(v) + 1) / len(v), where="post", lw=1, label=lab)
    for j, (name, law) in enumerate(laws.items()):
        ax.plot(grid, law(grid), ls="--", color=f"C{len(summaries) + j}", lw=1.5, label=f"limit {name}")
    ax.set_xlabel("standardized value")
    ax.set_ylabel("CDF")
    ax.set_ylim(0, 1)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_cells(raster: CellRaster, w, pts, path, star=None) -> Path:
    """Colored cells with generator dots and an optional last-covered marker."""
    img, _ = color_image(raster)
    x0, y0 = raster.origin
    extent = (x0, x0 + raster.width * raster.pixel, y0, y0 + raster.height * raster.pixel)
    fig, ax = plt.subplots(figsize=(5, 5 * raster.height / raster.width))
    ax.imshow(img, extent=extent, interpolation="nearest")
    inside = w.contains(pts.points)
    p = pts.points[inside]
    if pts.mark_kind == "radius":
        m = pts.marks[inside]
        ref = float(np.median(m[m > 0])) if (m > 0).any() else 1.0
        size = 8 * np.clip(m / ref, 0.2, 10)
    else:
        size = 8
    ax.scatter(p[:, 0], p[:, 1], s=size, c="red", zorder=3)
    if star is not None:
        ax.scatter([star[0]], [star[1]], marker="s", s=60, c="blue", zorder=4)
    ax.set_aspect("equal")
    ax.set_axis_off()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
