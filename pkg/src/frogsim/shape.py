"""Shape snapshots of the awakened set and the comparisons made on them.

A snapshot at time n holds xi_n. Its rescaled set is the union of closed
unit cells around xi_n divided by n (by 1 when n = 0). Comparisons use the
support function h(u) = (max_{x in xi_n} <x, u> + |u|_1 / 2) / n, which is
exact for a union of cells.
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .hull import cell_hull_doubled, contains_points
from .lattice import diamond_array


def direction_set(d: int) -> np.ndarray:
    """Unit directions for support-function sampling.

    d = 2: 64 evenly spaced angles (closed under the lattice symmetries).
    d >= 3: the 2d axis directions and all (+-1, ..., +-1) diagonals.
    """
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        a = 2 * math.pi * np.arange(64) / 64
        return np.column_stack([np.cos(a), np.sin(a)])
    axes = np.vstack([np.eye(d), -np.eye(d)])
    diag = np.array(list(itertools.product((1.0, -1.0), repeat=d))) / math.sqrt(d)
    return np.vstack([axes, diag])


def signed_permutations(d: int) -> list[np.ndarray]:
    """All 2^d d! coordinate permutations combined with sign flips, as matrices."""
    mats = []
    for perm in itertools.permutations(range(d)):
        for signs in itertools.product((1, -1), repeat=d):
            g = np.zeros((d, d), dtype=np.int64)
            for i, (p, s) in enumerate(zip(perm, signs)):
                g[i, p] = s
            mats.append(g)
    return mats


@dataclass(frozen=True)
class ShapeSnapshot:
    n: int
    xi: np.ndarray  # (K, d) int64

    @property
    def d(self) -> int:
        return self.xi.shape[1]

    @property
    def scale(self) -> int:
        return max(self.n, 1)

    def support(self, directions: np.ndarray | None = None) -> np.ndarray:
        u = direction_set(self.d) if directions is None else np.asarray(directions, dtype=np.float64)
        proj = (self.xi.astype(np.float64) @ u.T).max(axis=0)
        return (proj + 0.5 * np.abs(u).sum(axis=1)) / self.scale

    def hull_doubled(self) -> np.ndarray:
        """Exact hull of the cell union in doubled integer coordinates (d = 2)."""
        if self.d != 2:
            raise ValueError("exact hulls are computed for d = 2 only")
        return cell_hull_doubled(self.xi)

    def hull(self) -> np.ndarray:
        """Hull vertices of the rescaled cell union (d = 2)."""
        return self.hull_doubled() / (2.0 * self.scale)

    def mirrored(self, g: np.ndarray) -> "ShapeSnapshot":
        return ShapeSnapshot(self.n, self.xi @ np.asarray(g).T)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for s in self.xi.tolist():
            buf.write(",".join(map(str, s)) + "\n")
        return buf.getvalue()


def snapshot(state, n: int | None = None) -> ShapeSnapshot:
    """Snapshot of a discrete-time state, optionally at an earlier time n (from awakening times)."""
    t = state.time if n is None else int(n)
    if t > state.time:
        raise ValueError("cannot snapshot the future")
    f = np.flatnonzero((state.awake >= 0) & (state.awake <= t))
    return ShapeSnapshot(t, state.box.coords(f) - np.asarray(state.box.center))


def diamond_snapshot(d: int, n: int) -> ShapeSnapshot:
    return ShapeSnapshot(n, diamond_array(d, n))


def hull_within_padded_diamond(snap: ShapeSnapshot) -> bool:
    """Hull of the rescaled cells lies in (1 + 2/n) D, D the unit L1 ball.

    d = 2 is exact integer arithmetic on doubled coordinates: a vertex v/(2n)
    lies in (1 + 2/n) D iff |v|_1 <= 2n + 4. Other d use the support function
    on the direction set against h_D(u) = |u|_inf.
    """
    n = snap.scale
    if snap.d == 2:
        v = snap.hull_doubled()
        return bool(np.all(np.abs(v).sum(axis=1) <= 2 * n + 4))
    u = direction_set(snap.d)
    return bool(np.all(snap.support(u) <= (1 + 2 / n) * np.abs(u).max(axis=1) + 1e-12))


def hull_contains_sites(snap: ShapeSnapshot) -> bool:
    """The rescaled hull contains every rescaled site (exact, d = 2)."""
    return bool(contains_points(snap.hull_doubled(), 2 * snap.xi).all())


def sandwich_check(snap_n: ShapeSnapshot, snap_2n: ShapeSnapshot, eps: float) -> bool:
    """(1 - eps) h_A <= h_n <= (1 + eps) h_A on the direction set, with h_A from snap_2n."""
    if not 0 <= eps < 1:
        raise ValueError("eps must be in [0, 1)")
    u = direction_set(snap_n.d)
    h = snap_n.support(u)
    ha = snap_2n.support(u)
    return bool(np.all(h >= (1 - eps) * ha) and np.all(h <= (1 + eps) * ha))


def sandwich_margin(snap_n: ShapeSnapshot, snap_2n: ShapeSnapshot) -> float:
    """Smallest eps for which :func:`sandwich_check` passes."""
    u = direction_set(snap_n.d)
    return float(np.abs(snap_n.support(u) / snap_2n.support(u) - 1).max())


def symmetry_defect(snap: ShapeSnapshot, norm: str = "rms") -> float:
    """Largest relative deviation of h o g from h over the lattice symmetries g.

    ``norm="rms"``: |h o g - h|_2 / |h|_2 over the direction set, which for
    d = 2 is a Riemann sum of the L2 norm on the circle. ``norm="sup"``:
    max over directions u of |h(gu) - h(u)| / h(u), the pointwise version.
    """
    u = direction_set(snap.d)
    h = snap.support(u)
    worst = 0.0
    for g in signed_permutations(snap.d):
        hg = snap.support(u @ g.T)
        if norm == "rms":
            dev = float(np.sqrt(((hg - h) ** 2).mean() / (h**2).mean()))
        elif norm == "sup":
            dev = float((np.abs(hg - h) / h).max())
        else:
            raise ValueError(f"unknown norm {norm!r}")
        worst = max(worst, dev)
    return worst


def symmetry_check(snap: ShapeSnapshot, tol: float, norm: str = "rms") -> bool:
    if snap.d != 2:
        raise ValueError("symmetry_check is defined for d = 2")
    return symmetry_defect(snap, norm) <= tol


def inner_radius(snap: ShapeSnapshot) -> int:
    """Largest r with every lattice site of |x|_1 <= r in xi (0 if only the origin)."""
    xi = snap.xi
    R = int(np.abs(xi).sum(axis=1).max()) + 1
    lo = -R
    mask = np.zeros((2 * R + 1,) * snap.d, dtype=bool)
    mask[tuple((xi - lo).T)] = True
    axes = np.arange(-R, R + 1)
    l1 = sum(np.abs(g) for g in np.meshgrid(*([axes] * snap.d), indexing="ij"))
    missing = l1[~mask]
    return int(missing.min()) - 1


def smallball_fit(snap: ShapeSnapshot) -> float:
    """delta = r / n with r the inner radius of xi_n (lattice version of the small-ball radius)."""
    return inner_radius(snap) / snap.scale


def outer_radius(snap: ShapeSnapshot) -> int:
    return int(np.abs(snap.xi).sum(axis=1).max())
