"""SVG rendering of two-dimensional shape snapshots.

The picture shows the rescaled cell union xi_n / n, optionally with its convex
hull and the unit L1 diamond. Output depends only on the snapshot and the
flags, so identical snapshots give identical bytes.
"""

from __future__ import annotations

import numpy as np

SIZE = 600
EXTENT = 1.25  # half-width of the drawn region in rescaled units


def _fmt(v: float) -> str:
    s = f"{v:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _px(x: float, y: float) -> tuple[str, str]:
    k = SIZE / (2 * EXTENT)
    return _fmt(SIZE / 2 + k * x), _fmt(SIZE / 2 - k * y)


def cell_runs(xi: np.ndarray) -> list[tuple[int, int, int]]:
    """Maximal horizontal runs (x2, x1_start, x1_end) of sites, sorted."""
    if len(xi) == 0:
        return []
    order = np.lexsort((xi[:, 0], xi[:, 1]))
    s = xi[order]
    runs = []
    start = 0
    for i in range(1, len(s) + 1):
        if i == len(s) or s[i, 1] != s[i - 1, 1] or s[i, 0] != s[i - 1, 0] + 1:
            runs.append((int(s[start, 1]), int(s[start, 0]), int(s[i - 1, 0])))
            start = i
    return runs


def cell_rects(snap) -> list[tuple[float, float, float, float]]:
    """Rescaled rectangles (x0, y0, x1, y1) covering the cells, one per run."""
    n = snap.scale
    return [((a - 0.5) / n, (y - 0.5) / n, (b + 0.5) / n, (y + 0.5) / n) for y, a, b in cell_runs(snap.xi)]


def render_shape_svg(snap, hull: bool = True, diamond: bool = True) -> str:
    """SVG document for a d = 2 snapshot: cells, hull polygon and diamond overlay."""
    if snap.d != 2:
        raise ValueError("render_shape_svg needs a d = 2 snapshot")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>',
        '<g id="cells" fill="#4a78b5" stroke="none">',
    ]
    for x0, y0, x1, y1 in cell_rects(snap):
        px0, py1 = _px(x0, y1)
        px1, py0 = _px(x1, y0)
        out.append(f'<rect x="{px0}" y="{py1}" width="{_fmt(float(px1) - float(px0))}" '
                   f'height="{_fmt(float(py0) - float(py1))}"/>')
    out.append("</g>")
    if hull:
        pts = " ".join(",".join(_px(x, y)) for x, y in snap.hull().tolist())
        out.append(f'<polygon id="hull" points="{pts}" fill="none" stroke="#d62728" stroke-width="1.5"/>')
    if diamond:
        pts = " ".join(",".join(_px(x, y)) for x, y in ((1, 0), (0, 1), (-1, 0), (0, -1)))
        out.append(f'<polygon id="diamond" points="{pts}" fill="none" stroke="black" '
                   'stroke-width="1" stroke-dasharray="4,3"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def svg_points(svg: str, element_id: str) -> list[tuple[float, float]]:
    """Pixel points of the polygon with ``element_id`` in a rendered document."""
    import xml.etree.ElementTree as ET

    root = ET.fromstring(svg)
    for el in root.iter():
        if el.get("id") == element_id:
            return [tuple(map(float, p.split(","))) for p in el.get("points").split()]
    raise KeyError(element_id)


def to_rescaled(px: float, py: float) -> tuple[float, float]:
    k = SIZE / (2 * EXTENT)
    return (px - SIZE / 2) / k, (SIZE / 2 - py) / k
