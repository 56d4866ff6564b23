"""Raster cell pictures: which generator claims each pixel.

A pixel is labelled by the generator minimising ``s_i + |y - x_i|`` (growth
seeds) or ``|y - p_i| / Y_i`` (weighted points), lowest index on ties.
Pixel ``(row, col)`` is sampled at its lower-left corner, so the samples of
resolution ``r`` are a subset of those at ``2r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geom import Window
from .processes import BIRTH_TIME, MarkedPointSet

OUTSIDE_LABEL = -1

PALETTE = np.array(
    [
        [230, 97, 92],
        [93, 165, 218],
        [250, 200, 88],
        [96, 189, 104],
        [178, 118, 178],
        [241, 124, 176],
        [178, 145, 47],
        [77, 77, 77],
    ],
    dtype=np.uint8,
)
OUTSIDE_COLOR = np.array([255, 255, 255], dtype=np.uint8)


@dataclass(frozen=True)
class CellRaster:
    width: int
    height: int
    origin: tuple[float, float]  # lower-left corner of the raster in the plane
    pixel: float  # side length of one pixel
    labels: np.ndarray  # (height, width), row 0 at the top
    n_generators: int

    def sample_points(self) -> np.ndarray:
        """Plane coordinates of every pixel's sample point, shape (height, width, 2)."""
        cols = np.arange(self.width)
        rows = np.arange(self.height)
        x = self.origin[0] + cols * self.pixel
        y = self.origin[1] + (self.height - 1 - rows) * self.pixel
        X, Y = np.meshgrid(x, y)
        return np.stack([X, Y], axis=-1)

    def to_pixel(self, p) -> tuple[float, float]:
        """Continuous (col, row) image coordinates of a plane point."""
        col = (p[0] - self.origin[0]) / self.pixel
        row = self.height - (p[1] - self.origin[1]) / self.pixel
        return col, row


def assign_cells(w: Window, pts: MarkedPointSet, mode: str | None = None, resolution: int = 256) -> CellRaster:
    """Label raster pixels of ``w`` by their claiming generator."""
    if w.d != 2:
        raise ValueError("cell pictures are planar")
    if len(pts) == 0:
        raise ValueError("no generators")
    if resolution < 16:
        raise ValueError("resolution must be >= 16")
    mode = mode or ("jm" if pts.mark_kind == BIRTH_TIME else "spbm")
    if mode not in ("jm", "spbm"):
        raise ValueError("mode must be 'jm' or 'spbm'")
    lo, hi = w.bbox
    span = hi - lo
    pixel = float(span.max()) / resolution
    width = max(1, int(round(span[0] / pixel)))
    height = max(1, int(round(span[1] / pixel)))
    raster = CellRaster(width, height, (float(lo[0]), float(lo[1])), pixel,
                        np.empty((height, width), dtype=np.int32), len(pts))
    sp = raster.sample_points().reshape(-1, 2)
    inside = w.contains(sp)
    labels = np.full(len(sp), OUTSIDE_LABEL, dtype=np.int32)
    labels[inside] = _argmin_generator(sp[inside], pts, mode)
    raster.labels[:] = labels.reshape(height, width)
    return raster


def _argmin_generator(q, pts: MarkedPointSet, mode: str, chunk: int = 4_000_000) -> np.ndarray:
    out = np.empty(len(q), dtype=np.int32)
    step = max(1, chunk // len(pts))
    marks = pts.marks
    for s in range(0, len(q), step):
        diff = q[s : s + step, None, :] - pts.points[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        if mode == "jm":
            v = dist + marks[None, :]
        else:
            with np.errstate(divide="ignore"):
                v = np.where(marks[None, :] > 0, dist / np.where(marks > 0, marks, 1.0)[None, :], np.inf)
        out[s : s + step] = np.argmin(v, axis=1)  # first index on ties
    return out


def adjacency(raster: CellRaster) -> set[tuple[int, int]]:
    """Pairs of labels sharing a pixel edge."""
    L = raster.labels
    pairs = set()
    for a, b in ((L[:, :-1], L[:, 1:]), (L[:-1, :], L[1:, :])):
        m = (a != b) & (a >= 0) & (b >= 0)
        if m.any():
            e = np.stack([np.minimum(a[m], b[m]), np.maximum(a[m], b[m])], axis=1)
            pairs.update(map(tuple, np.unique(e, axis=0).tolist()))
    return pairs


def greedy_coloring(raster: CellRaster, n_colors: int = 5) -> np.ndarray:
    """Color index per generator so that adjacent cells differ.

    Greedy in order of decreasing degree; uses more than ``n_colors`` only if
    greedy needs them.
    """
    n = raster.n_generators
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for a, b in adjacency(raster):
        nbrs[a].add(b)
        nbrs[b].add(a)
    color = np.full(n, -1, dtype=int)
    for v in sorted(range(n), key=lambda i: (-len(nbrs[i]), i)):
        used = {color[u] for u in nbrs[v]}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    del n_colors
    return color


def color_image(raster: CellRaster) -> tuple[np.ndarray, np.ndarray]:
    """RGB image (height, width, 3) and the per-generator color map."""
    colors = greedy_coloring(raster)
    if colors.size and colors.max() >= len(PALETTE):
        rng = np.random.default_rng(0)
        extra = rng.integers(40, 220, size=(colors.max() + 1 - len(PALETTE), 3), dtype=np.uint8)
        palette = np.vstack([PALETTE, extra])
    else:
        palette = PALETTE
    cmap = palette[colors] if colors.size else np.zeros((0, 3), np.uint8)
    img = np.empty(raster.labels.shape + (3,), dtype=np.uint8)
    inside = raster.labels >= 0
    img[~inside] = OUTSIDE_COLOR
    img[inside] = cmap[raster.labels[inside]]
    return img, cmap


def write_ppm(path, img: np.ndarray) -> None:
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError("only 8-bit PPM supported")
    pos += 1
    return np.frombuffer(data[pos : pos + w * h * 3], dtype=np.uint8).reshape(h, w, 3).copy()


def _svg_overlay(raster: CellRaster, w: Window, pts: MarkedPointSet, star) -> str:
    W, H = raster.width, raster.height
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
    ]
    if w.kind == "disc":
        cx, cy = raster.to_pixel(w.center)
        out.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{w.radius / raster.pixel:.3f}" '
                   'fill="none" stroke="black" stroke-width="1"/>')
    else:
        poly = " ".join("{:.3f},{:.3f}".format(*raster.to_pixel(v)) for v in w.vertices)
        out.append(f'<polygon points="{poly}" fill="none" stroke="black" stroke-width="1"/>')
    base = max(1.5, 0.004 * max(W, H))
    if pts.mark_kind == BIRTH_TIME:
        sizes = np.full(len(pts), base)
    else:
        m = pts.marks
        ref = float(np.median(m[m > 0])) if (m > 0).any() else 1.0
        sizes = base * np.clip(np.sqrt(m / ref), 0.4, 4.0)
    for p, s in zip(pts.points, sizes):
        if not w.contains(p):
            continue
        cx, cy = raster.to_pixel(p)
        out.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{s:.3f}" fill="red"/>')
    if star is not None:
        cx, cy = raster.to_pixel(star)
        s = 2.5 * base
        out.append(f'<rect x="{cx - s:.3f}" y="{cy - s:.3f}" width="{2 * s:.3f}" height="{2 * s:.3f}" fill="blue"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(raster: CellRaster, w: Window, pts: MarkedPointSet, path, star=None) -> tuple[Path, Path]:
    """Write ``path`` as a P6 pixmap and ``path`` with suffix ``.svg`` as the overlay."""
    path = Path(path)
    img, _ = color_image(raster)
    write_ppm(path, img)
    svg = path.with_suffix(".svg")
    svg.write_text(_svg_overlay(raster, w, pts, star))
    return path, svg
