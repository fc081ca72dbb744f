"""Exact 2-D convex hulls on integer points (monotone chain)."""

from __future__ import annotations

import numpy as np


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> np.ndarray:
    """Hull vertices in counter-clockwise order, collinear points dropped.

    Integer input gives exact orientation tests (Python ints, no overflow).
    """
    pts = sorted(set(map(tuple, np.asarray(points).tolist())))
    if len(pts) <= 2:
        return np.array(pts, dtype=np.int64).reshape(-1, 2)
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=np.int64)


def cell_hull_doubled(sites) -> np.ndarray:
    """Hull of the union of closed unit cells centred at ``sites``, in doubled coordinates.

    Vertices are 2x +- (1, 1); doubling keeps every corner integral. The hull
    of the cells equals the hull of the corners of the cells at hull vertices
    of the centres.
    """
    sites = np.asarray(sites, dtype=np.int64).reshape(-1, 2)
    centres = convex_hull(sites)
    corners = (2 * centres[:, None, :] + np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]])[None]).reshape(-1, 2)
    return convex_hull(corners)


def is_convex_ccw(vertices) -> bool:
    v = np.asarray(vertices).tolist()
    k = len(v)
    if k < 3:
        return True
    return all(_cross(v[i], v[(i + 1) % k], v[(i + 2) % k]) > 0 for i in range(k))


def polygon_area(vertices) -> float:
    v = np.asarray(vertices, dtype=np.float64)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def contains_points(vertices, points) -> np.ndarray:
    """Closed containment of integer points in a CCW convex polygon, exact."""
    v = np.asarray(vertices, dtype=np.int64)
    p = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    inside = np.ones(len(p), dtype=bool)
    k = len(v)
    if k < 3:
        raise ValueError("degenerate polygon")
    for i in range(k):
        a, b = v[i], v[(i + 1) % k]
        cross = (b[0] - a[0]) * (p[:, 1] - a[1]) - (b[1] - a[1]) * (p[:, 0] - a[0])
        inside &= cross >= 0
    return inside
