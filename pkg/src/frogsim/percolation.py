"""Oriented bond percolation on the quadrant Z^2_+ (bonds x -> x+e1 and x -> x+e2)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._hashing import TAG_BOND, site_words_np, to_unit_np


def theta(d: int, m: int) -> float:
    """Open-bond probability 1 - (1 - 1/(2d))^(m/2) of the flat-edge coupling.

    Half of a site's m particles are assigned to each of the two bonds; a bond
    is open when at least one of its particles makes its first step along it.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if m < 2 or m % 2:
        raise ValueError("m must be even and >= 2")
    return 1.0 - (1.0 - 1.0 / (2 * d)) ** (m // 2)


@dataclass(frozen=True)
class OrientedPercolationState:
    """Bonds and cluster of 0 on the triangle {x >= 0 : x1 + x2 <= n}.

    Arrays are indexed [x1, x2]; entries with x1 + x2 > n are unused (False).
    """

    theta: float
    n: int
    right: np.ndarray
    up: np.ndarray
    cluster: np.ndarray

    def cluster_sites(self) -> np.ndarray:
        return np.argwhere(self.cluster)

    def cluster_size(self) -> int:
        return int(self.cluster.sum())

    def max_level(self) -> int:
        """Largest x1 + x2 reached by the cluster of 0."""
        s = self.cluster_sites()
        return int(s.sum(axis=1).max())

    def reaches(self, level: int) -> bool:
        return self.max_level() >= level


def triangle(n: int) -> np.ndarray:
    """Sites of {x in Z^2_+ : x1 + x2 <= n}, shape (K, 2)."""
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = (i + j) <= n
    return np.stack([i[keep], j[keep]], axis=1).astype(np.int64)


def cluster_from_bonds(right: np.ndarray, up: np.ndarray, n: int) -> np.ndarray:
    """Sites reachable from 0 by oriented open paths, swept level by level."""
    reach = np.zeros((n + 1, n + 1), dtype=bool)
    reach[0, 0] = True
    for level in range(1, n + 1):
        x1 = np.arange(level + 1)
        x2 = level - x1
        from_left = np.zeros(level + 1, dtype=bool)
        from_below = np.zeros(level + 1, dtype=bool)
        a = x1[1:]
        from_left[1:] = reach[a - 1, x2[1:]] & right[a - 1, x2[1:]]
        b = x1[:-1]
        from_below[:-1] = reach[b, x2[:-1] - 1] & up[b, x2[:-1] - 1]
        reach[x1, x2] = from_left | from_below
    return reach


def oriented_percolation(theta: float, n: int, seed: int) -> OrientedPercolationState:
    """I.i.d. open bonds with probability theta (hash-derived) and the cluster of 0 up to level n."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must be in [0, 1]")
    if n < 0:
        raise ValueError("n must be >= 0")
    sites = triangle(n)
    right = np.zeros((n + 1, n + 1), dtype=bool)
    up = np.zeros((n + 1, n + 1), dtype=bool)
    for arr, lane in ((right, 0), (up, 1)):
        coords = np.column_stack([sites, np.full(len(sites), lane)])
        u = to_unit_np(site_words_np(seed, TAG_BOND, coords))
        arr[sites[:, 0], sites[:, 1]] = u < theta
    return OrientedPercolationState(theta, n, right, up, cluster_from_bonds(right, up, n))
