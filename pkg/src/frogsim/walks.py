"""Coupled simple random walks S^x realized lazily from a counter hash.

The k-th step of walk ``(x, j)`` (particle ``j`` originally sleeping at ``x``)
is ``counter_bits(key(seed, x, j), k) mod 2d``, decoded with the direction
order of :func:`frogsim.lattice.step_vectors`. Every frog process run with the
same seed therefore moves a given particle along the same path, whichever
site the process was started from; only its wake-up time differs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._hashing import (
    TAG_PARTICLE,
    counter_bits_np,
    fold_np,
    mix64_np,
    particle_keys_np,
    replica_seeds,
    seed_word,
)
from .lattice import as_point, step_vectors


@dataclass(frozen=True)
class Trajectory:
    origin: tuple[int, ...]
    positions: np.ndarray  # (k + 1, d), positions[0] == origin


class WalkStore:
    """Deterministic family of walks {S^x} for one seed.

    Realized prefixes are cached per (origin, particle index). Because every
    step is a pure function of (seed, origin, j, k), dropping the cache never
    changes what is realized later.
    """

    def __init__(self, seed: int, d: int, cache: bool = True):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        self.seed = int(seed_word(seed))
        self.d = int(d)
        self._steps = step_vectors(self.d)
        self._cache: dict[tuple, np.ndarray] | None = {} if cache else None

    def key(self, origin, j: int = 0) -> np.uint64:
        pt = as_point(origin, self.d)
        return particle_keys_np(self.seed, np.array([pt]), np.array([j]))[0]

    def directions(self, origin, k_from: int, k_to: int, j: int = 0) -> np.ndarray:
        """Direction indices of steps k_from..k_to (inclusive, k_from >= 1)."""
        if k_from < 1:
            raise ValueError("step indices start at 1")
        k = np.arange(k_from, k_to + 1, dtype=np.uint64)
        bits = counter_bits_np(self.key(origin, j), k)
        return (bits % np.uint64(2 * self.d)).astype(np.int64)

    def step_at(self, origin, k: int, j: int = 0) -> tuple[int, ...]:
        if k < 1:
            raise ValueError("k must be >= 1")
        return tuple(int(v) for v in self._steps[self.directions(origin, k, k, j)[0]])

    def _prefix(self, origin, k: int, j: int) -> np.ndarray:
        pt = as_point(origin, self.d)
        if self._cache is None:
            return self._realize(pt, np.array([pt], dtype=np.int64), 0, k, j)
        cached = self._cache.get((pt, j))
        if cached is None:
            cached = np.array([pt], dtype=np.int64)
        if len(cached) <= k:
            cached = self._realize(pt, cached, len(cached) - 1, k, j)
            self._cache[(pt, j)] = cached
        return cached[: k + 1]

    def _realize(self, pt, prefix, have, k, j):
        if k <= have:
            return prefix
        steps = self._steps[self.directions(pt, have + 1, k, j)]
        ext = prefix[-1] + np.cumsum(steps, axis=0)
        return np.concatenate([prefix, ext])

    def trajectory(self, origin, k: int, j: int = 0) -> Trajectory:
        if k < 0:
            raise ValueError("k must be >= 0")
        return Trajectory(as_point(origin, self.d), self._prefix(origin, k, j).copy())

    def position(self, origin, k: int, j: int = 0) -> tuple[int, ...]:
        if k < 0:
            raise ValueError("k must be >= 0")
        return tuple(int(v) for v in self._prefix(origin, k, j)[k])

    def hitting_time(self, x, z, horizon: int, j: int = 0) -> int | None:
        """min{n <= horizon : S^x_n = z}, or None when z is not hit by the horizon."""
        if horizon < 0:
            raise ValueError("horizon must be >= 0")
        z = np.asarray(as_point(z, self.d))
        hits = np.flatnonzero(np.all(self._prefix(x, horizon, j) == z, axis=1))
        return int(hits[0]) if hits.size else None

    def sup_displacement(self, origin, n: int, j: int = 0) -> float:
        if n < 0:
            raise ValueError("n must be >= 0")
        path = self._prefix(origin, n, j) - np.asarray(as_point(origin, self.d))
        return math.sqrt(int((path**2).sum(axis=1).max()))

    def clear(self) -> None:
        if self._cache is not None:
            self._cache.clear()


def replica_walk_keys(d: int, base_seed: int, replicas: int) -> np.ndarray:
    """Keys of the origin walk S^0 for ``replicas`` independent replica seeds."""
    h = mix64_np(replica_seeds(base_seed, replicas) ^ TAG_PARTICLE)
    for _ in range(d):
        h = fold_np(h, np.uint64(0))
    return fold_np(h, np.uint64(0))


def endpoints(d: int, n: int, keys: np.ndarray) -> np.ndarray:
    out = np.zeros((len(keys), d), dtype=np.int64)
    kernels.walk_endpoints(keys, n, d, out)
    return out


def hitting_times(d: int, n: int, target, keys: np.ndarray) -> np.ndarray:
    """First time each walk from 0 hits ``target`` within n steps (-1 if never)."""
    out = np.empty(len(keys), dtype=np.int64)
    kernels.walk_hitting_times(keys, n, np.asarray(as_point(target, d), dtype=np.int64), out)
    return out


def sup_sq_displacements(d: int, n: int, keys: np.ndarray) -> np.ndarray:
    out = np.empty(len(keys), dtype=np.int64)
    kernels.walk_sup_sq(keys, n, d, out)
    return out


def ranges(d: int, n: int, keys: np.ndarray) -> np.ndarray:
    if (2 * n + 1) ** d >= 2**62:
        raise OverflowError("range encoding overflows int64 at this (d, n)")
    out = np.empty(len(keys), dtype=np.int64)
    kernels.walk_ranges(keys, n, d, out)
    return out
