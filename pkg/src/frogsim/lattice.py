"""Integer-lattice geometry on Z^d: norms, neighbours, diamonds, boxes."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import ndimage


def as_point(x, d: int | None = None) -> tuple[int, ...]:
    """Coerce ``x`` (int or sequence of ints) to a coordinate tuple of length ``d``."""
    if np.isscalar(x):
        pt = (int(x),)
    else:
        pt = tuple(int(c) for c in x)
    if d is not None and len(pt) != d:
        raise ValueError(f"expected a point of dimension {d}, got {pt}")
    return pt


def l1_norm(x) -> int:
    return int(sum(abs(int(c)) for c in np.atleast_1d(x)))


def l2_norm(x) -> float:
    return math.sqrt(sum(int(c) ** 2 for c in np.atleast_1d(x)))


def unit(d: int, i: int, sign: int = 1) -> tuple[int, ...]:
    v = [0] * d
    v[i] = sign
    return tuple(v)


def step_vectors(d: int) -> np.ndarray:
    """The 2d unit steps in the fixed order +e1, -e1, +e2, -e2, ...

    Row ``r`` of the result is the step encoded by direction index ``r``; the
    walk kernels rely on this order.
    """
    out = np.zeros((2 * d, d), dtype=np.int64)
    for i in range(d):
        out[2 * i, i] = 1
        out[2 * i + 1, i] = -1
    return out


def neighbors(x) -> list[tuple[int, ...]]:
    pt = as_point(x)
    return [tuple(int(a + b) for a, b in zip(pt, s)) for s in step_vectors(len(pt))]


@dataclass(frozen=True)
class DiamondRegion:
    radius: int
    center: tuple[int, ...] = field(default=(0,))

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be non-negative")

    @property
    def d(self) -> int:
        return len(self.center)

    def __contains__(self, x) -> bool:
        return l1_norm(np.subtract(as_point(x, self.d), self.center)) <= self.radius

    def size(self) -> int:
        return diamond_size(self.d, self.radius)


def diamond_size(d: int, r: int) -> int:
    """|{x in Z^d : |x|_1 <= r}| = sum_k 2^k C(d,k) C(r,k)."""
    return sum(2**k * math.comb(d, k) * math.comb(r, k) for k in range(min(d, r) + 1))


def _diamond_rec(d: int, r: int) -> Iterator[tuple[int, ...]]:
    if d == 1:
        for a in range(-r, r + 1):
            yield (a,)
        return
    for a in range(-r, r + 1):
        for rest in _diamond_rec(d - 1, r - abs(a)):
            yield (a,) + rest


def diamond_sites(region: DiamondRegion) -> Iterator[tuple[int, ...]]:
    """Members of the diamond, each once, in lexicographic order."""
    c = region.center
    for off in _diamond_rec(region.d, region.radius):
        yield tuple(a + b for a, b in zip(c, off))


def diamond_array(d: int, r: int) -> np.ndarray:
    """Sites of D_r as an (N, d) int64 array in lexicographic order."""
    if r < 0:
        return np.zeros((0, d), dtype=np.int64)
    axes = np.arange(-r, r + 1, dtype=np.int64)
    grid = np.stack(np.meshgrid(*([axes] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return grid[np.abs(grid).sum(axis=1) <= r]


class Box:
    """Dense cube [c - W, c + W]^d with flat (row-major) indexing.

    The simulators keep every per-site table as a flat array over such a box;
    ``offsets`` maps a direction index (see :func:`step_vectors`) to the
    flat-index increment of that step.
    """

    def __init__(self, d: int, half_width: int, center: Sequence[int] | None = None):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        if half_width < 0:
            raise ValueError("half_width must be >= 0")
        self.d = d
        self.W = int(half_width)
        self.center = np.zeros(d, dtype=np.int64) if center is None else np.asarray(center, dtype=np.int64)
        if self.center.shape != (d,):
            raise ValueError("center has wrong dimension")
        self.side = 2 * self.W + 1
        self.size = self.side**d
        if self.size > 2**31:
            raise MemoryError(f"box of {self.size} cells is beyond desk scale")
        self.strides = np.array([self.side ** (d - 1 - i) for i in range(d)], dtype=np.int64)
        self.offsets = (step_vectors(d) * self.strides).sum(axis=1)

    def flat(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=np.int64) - self.center + self.W
        if np.any(c < 0) or np.any(c >= self.side):
            raise IndexError("coordinates outside the box")
        return c @ self.strides

    def coords(self, flat) -> np.ndarray:
        flat = np.asarray(flat, dtype=np.int64)
        out = np.empty(flat.shape + (self.d,), dtype=np.int64)
        rem = flat.copy()
        for i, s in enumerate(self.strides):
            out[..., i] = rem // s
            rem = rem % s
        return out - self.W + self.center

    def contains(self, coords) -> bool:
        c = np.asarray(coords, dtype=np.int64) - self.center
        return bool(np.all(np.abs(c) <= self.W))


def is_nn_connected(sites: np.ndarray) -> bool:
    """True iff ``sites`` form one component under L1-distance-1 adjacency.

    Nearest-neighbour connectivity of the sites implies connectivity of the
    union of their closed unit cells.
    """
    sites = np.asarray(sites, dtype=np.int64)
    if len(sites) <= 1:
        return True
    lo = sites.min(axis=0)
    shape = tuple(sites.max(axis=0) - lo + 1)
    mask = np.zeros(shape, dtype=bool)
    mask[tuple((sites - lo).T)] = True
    return mask_nn_connected(mask)


def mask_nn_connected(mask: np.ndarray) -> bool:
    """Nearest-neighbour connectivity of the True cells of a dense d-dim mask."""
    structure = ndimage.generate_binary_structure(mask.ndim, 1)
    _, ncomp = ndimage.label(mask, structure=structure)
    return ncomp <= 1


def sites_to_csv(sites: Iterable[Sequence[int]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for s in sites:
        w.writerow([int(c) for c in s])
    return buf.getvalue()


def sites_from_csv(text: str) -> np.ndarray:
    rows = [[int(v) for v in row] for row in csv.reader(io.StringIO(text)) if row]
    if not rows:
        return np.zeros((0, 0), dtype=np.int64)
    return np.array(rows, dtype=np.int64)
