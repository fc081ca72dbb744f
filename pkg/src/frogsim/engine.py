"""Frog-model dynamics in discrete and continuous time.

Discrete time runs on a dense box [start - H, start + H]^d, H the horizon:
a particle awake since time s has made at most n - s steps by time n, so no
site outside the box can be reached before the horizon. Per-site tables are
flat arrays over that box (see :class:`frogsim.lattice.Box`).

Two discrete engines share the awakening logic:

* coupled: every particle is tracked and follows its own walk from
  :mod:`frogsim.walks`, so processes started at different sites (or with
  different particle counts) are coupled pathwise;
* aggregated: only per-site active counts are kept and dispersed
  multinomially each step. Same law, no pathwise coupling.

A site visited at time n has all its sleepers activated at n; they make their
first step at n + 1. All particles initially at the start site are active at
time 0.
"""

from __future__ import annotations

import enum
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._hashing import TAG_AGG, TAG_COUNT, TAG_PARTICLE, mix64_np, seed_word
from .kernels import _np as _npk
from .lattice import Box, as_point, diamond_size

DEFAULT_MAX_PARTICLES = 30_000_000


class HorizonExceeded(Exception):
    """A passage time was not resolved by the horizon (a censored observation)."""

    def __init__(self, target, horizon):
        super().__init__(f"target {target} not reached by horizon {horizon}")
        self.target = target
        self.horizon = horizon


class EngineMode(str, enum.Enum):
    COUPLED = "coupled"
    AGGREGATED = "aggregated"


_KINDS = {"one": 0, "m": 1, "heavy": 2}


@dataclass(frozen=True)
class InitialConfig:
    """Initial sleeper law.

    ``variant`` is ``"one"`` (one per site), ``"m"`` (m per site) or
    ``"heavy"``: eta = (2d)^N with P[N >= k] = k^(-delta) for k >= 1, where
    N is capped at ``cap_exponent`` (each cap hit is counted by the engine).
    """

    variant: str = "one"
    m: int = 1
    delta: float = 1.0
    cap_exponent: int = 20

    def __post_init__(self):
        if self.variant not in _KINDS:
            raise ValueError(f"unknown initial configuration {self.variant!r}")
        if self.variant == "m" and self.m < 1:
            raise ValueError("m must be a positive integer")
        if self.variant == "heavy":
            if not self.delta > 0:
                raise ValueError("delta must be > 0")
            if self.cap_exponent < 1:
                raise ValueError("cap_exponent must be >= 1")

    @classmethod
    def one_per_site(cls):
        return cls("one")

    @classmethod
    def m_per_site(cls, m: int):
        return cls("m", m=int(m))

    @classmethod
    def heavy_tail(cls, delta: float, cap_exponent: int = 20):
        return cls("heavy", delta=float(delta), cap_exponent=int(cap_exponent))

    @property
    def kind(self) -> int:
        return _KINDS[self.variant]

    @property
    def per_site(self) -> int:
        """Particles per site for the deterministic laws, 1 for the heavy tail."""
        return self.m if self.variant == "m" else 1

    def kernel_args(self):
        return (self.kind, self.m, 1.0 / self.delta, float(self.cap_exponent))

    def counts(self, seed: int, coords) -> tuple[np.ndarray, int]:
        """Initial counts of the sites ``coords`` (K, d) and the number of capped draws."""
        coords = np.atleast_2d(np.asarray(coords, dtype=np.int64))
        seed_cnt = mix64_np(seed_word(seed) ^ TAG_COUNT)
        return _npk.site_counts(*self.kernel_args(), 2 * coords.shape[1], seed_cnt, coords)

    def to_dict(self) -> dict:
        if self.variant == "one":
            return {"variant": "one"}
        if self.variant == "m":
            return {"variant": "m", "m": self.m}
        return {"variant": "heavy", "delta": self.delta, "cap_exponent": self.cap_exponent}

    @classmethod
    def from_dict(cls, data: dict) -> "InitialConfig":
        allowed = {"variant", "m", "delta", "cap_exponent"}
        extra = set(data) - allowed
        if extra:
            raise ValueError(f"unknown initial-config keys: {sorted(extra)}")
        return cls(**data)


def _seeds(seed):
    s = seed_word(seed)
    return (
        np.uint64(mix64_np(s ^ TAG_PARTICLE)),
        np.uint64(mix64_np(s ^ TAG_COUNT)),
        np.uint64(mix64_np(s ^ TAG_AGG)),
    )


@dataclass(frozen=True)
class AwakeningRecord:
    """Awakened sites (lexicographic order) with their awakening times."""

    sites: np.ndarray  # (K, d) int64
    times: np.ndarray  # (K,) int64 or float64

    def __len__(self):
        return len(self.times)

    def get(self, x):
        hit = np.flatnonzero(np.all(self.sites == np.asarray(x), axis=1))
        return None if hit.size == 0 else self.times[hit[0]].item()

    def to_csv(self) -> str:
        buf = io.StringIO()
        for s, t in zip(self.sites.tolist(), self.times.tolist()):
            buf.write(",".join(str(c) for c in s) + f",{t}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, real_times: bool = False) -> "AwakeningRecord":
        rows = [line.split(",") for line in text.splitlines() if line.strip()]
        sites = np.array([[int(v) for v in r[:-1]] for r in rows], dtype=np.int64)
        conv = float if real_times else int
        times = np.array([conv(r[-1]) for r in rows], dtype=np.float64 if real_times else np.int64)
        return cls(sites, times)


class FrogState:
    """Discrete-time frog process started from ``start`` with one realization per seed.

    Use :func:`init` to build one and :func:`run` / :func:`step` to advance it.
    """

    def __init__(self, d, config, seed, mode=EngineMode.COUPLED, horizon=100, start=None,
                 max_particles=DEFAULT_MAX_PARTICLES):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        if horizon < 0:
            raise ValueError("horizon must be >= 0")
        self.d = int(d)
        self.config = config
        self.seed = int(seed_word(seed))
        self.mode = EngineMode(mode)
        self.horizon = int(horizon)
        self.start = as_point(start if start is not None else (0,) * self.d, self.d)
        self.max_particles = int(max_particles)
        self.box = Box(self.d, self.horizon, self.start)
        self._seed_pk, self._seed_cnt, self._agg_seed = _seeds(self.seed)
        size = self.box.size
        self.awake = np.full(size, -1, dtype=np.int64)
        self._no_targets = np.zeros(1, dtype=np.uint8)
        s0 = int(self.box.flat(self.start))
        self._s0 = s0
        self.awake[s0] = 0
        counts, capped = config.counts(self.seed, [self.start])
        c0 = int(counts[0])
        if self.mode is EngineMode.COUPLED:
            cap = min(self.max_particles, max(1024, 4 * c0))
            if c0 > self.max_particles:
                raise MemoryError("initial particle count exceeds max_particles")
            self._alloc(cap)
            self.pend_site[0] = s0
            self.pend_count[0] = c0
            # time, n_active, n_pending, remaining, cap_events, has_targets
            self.scal = np.array([0, 0, 1, 0, capped, 0], dtype=np.int64)
        else:
            self.cnt = np.zeros(size, dtype=np.int64)
            self.nxt = np.zeros(size, dtype=np.int64)
            self.occ = np.zeros(size, dtype=np.int64)
            self.newocc = np.zeros(size, dtype=np.int64)
            self.cnt[s0] = c0
            self.occ[0] = s0
            # time, n_occupied, remaining, cap_events, has_targets
            self.scal = np.array([0, 1, 0, capped, 0], dtype=np.int64)

    def _alloc(self, cap):
        old = getattr(self, "pos", None)
        fields = {
            "pos": np.int64, "key": np.uint64, "ksteps": np.int64, "origin": np.int64,
            "jidx": np.int64, "pend_site": np.int64, "pend_count": np.int64,
        }
        for name, dt in fields.items():
            arr = np.zeros(cap, dtype=dt)
            if old is not None:
                prev = getattr(self, name)
                arr[: len(prev)] = prev
            setattr(self, name, arr)

    # -- state queries -------------------------------------------------------

    @property
    def time(self) -> int:
        return int(self.scal[0])

    @property
    def cap_events(self) -> int:
        return int(self.scal[4] if self.mode is EngineMode.COUPLED else self.scal[3])

    def awake_flat(self) -> np.ndarray:
        return np.flatnonzero(self.awake >= 0)

    def xi(self) -> np.ndarray:
        """Awakened sites as an (K, d) array, lexicographic order."""
        return self.box.coords(self.awake_flat())

    def xi_size(self) -> int:
        return int(np.count_nonzero(self.awake >= 0))

    def record(self) -> AwakeningRecord:
        f = self.awake_flat()
        return AwakeningRecord(self.box.coords(f), self.awake[f].copy())

    def awaken_time(self, x) -> int | None:
        x = as_point(x, self.d)
        if not self.box.contains(x):
            return None
        t = int(self.awake[self.box.flat(x)])
        return None if t < 0 else t

    def active_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """Sites holding active particles and how many, lexicographic order."""
        if self.mode is EngineMode.COUPLED:
            n_act, n_pend = int(self.scal[1]), int(self.scal[2])
            flats = np.concatenate([self.pos[:n_act], self.pend_site[:n_pend]])
            weights = np.concatenate([np.ones(n_act, dtype=np.int64), self.pend_count[:n_pend]])
            sites, inv = np.unique(flats, return_inverse=True)
            counts = np.bincount(inv, weights=weights).astype(np.int64)
        else:
            sites = np.sort(self.occ[: int(self.scal[1])])
            counts = self.cnt[sites]
        keep = counts > 0
        return self.box.coords(sites[keep]), counts[keep]

    def active_total(self) -> int:
        if self.mode is EngineMode.COUPLED:
            return int(self.scal[1] + self.pend_count[: int(self.scal[2])].sum())
        return int(self.cnt[self.occ[: int(self.scal[1])]].sum())

    def sleeping_count(self, x) -> int:
        """Sleepers still at ``x``; unvisited sites report their (lazily drawn) initial count."""
        if self.awaken_time(x) is not None:
            return 0
        return int(self.config.counts(self.seed, [as_point(x, self.d)])[0][0])

    def initial_total(self) -> int:
        """Total initial particles over the awakened (visited) region."""
        return int(self.config.counts(self.seed, self.xi())[0].sum())

    def particles(self):
        """Coupled mode: (origin sites, particle index j, awakening time) of every active particle."""
        if self.mode is not EngineMode.COUPLED:
            raise ValueError("per-particle data exists in coupled mode only")
        n_act = int(self.scal[1])
        org = self.origin[:n_act]
        return self.box.coords(org), self.jidx[:n_act].copy(), self.awake[org].copy()

    def snapshot_json(self) -> str:
        f = self.awake_flat()
        sites = [
            {"coords": c, "sleeping": 0, "awaken_time": int(t)}
            for c, t in zip(self.box.coords(f).tolist(), self.awake[f].tolist())
        ]
        return json.dumps({"time": self.time, "sites": sites})

    # -- advancing -----------------------------------------------------------

    def _advance(self, n, target_flats=None):
        if n < self.time:
            raise ValueError(f"cannot run backwards from {self.time} to {n}")
        if n > self.horizon:
            raise ValueError(f"time {n} is beyond the horizon {self.horizon}")
        if target_flats is None:
            mask = self._no_targets
            has_t, remaining = 0, 0
        else:
            mask = np.zeros(self.box.size, dtype=np.uint8)
            mask[target_flats] = 1
            has_t = 1
            remaining = int(np.count_nonzero(self.awake[np.unique(target_flats)] < 0))
        b = self.box
        kind, m, inv_delta, cap_exp = self.config.kernel_args()
        if self.mode is EngineMode.COUPLED:
            self.scal[3], self.scal[5] = remaining, has_t
            while True:
                status = kernels.advance_coupled(
                    self.awake, mask, b.offsets, b.strides, b.W, b.center, self._seed_pk,
                    self._seed_cnt, kind, m, inv_delta, cap_exp, self.pos, self.key,
                    self.ksteps, self.origin, self.jidx, self.pend_site, self.pend_count,
                    self.scal, n)
                if status != kernels.NEED_CAPACITY:
                    break
                need = int(self.scal[1] + self.pend_count[: int(self.scal[2])].sum())
                if need > self.max_particles:
                    raise MemoryError(
                        f"{need} active particles exceed max_particles={self.max_particles}")
                self._alloc(min(self.max_particles, max(2 * len(self.pos), need)))
        else:
            self.scal[2], self.scal[4] = remaining, has_t
            while self.scal[0] < n and not (has_t and self.scal[2] == 0):
                # a fresh generator per step keeps results independent of how runs are split
                rng = np.random.default_rng([int(self._agg_seed), int(self.scal[0]) + 1])
                kernels.aggregated_step(
                    self.awake, mask, b.offsets, b.strides, b.W, b.center, self._seed_cnt, rng,
                    kind, m, inv_delta, cap_exp, self.cnt, self.nxt, self.occ, self.newocc,
                    self.scal)
        return self


def init(d, config=None, seed=0, mode=EngineMode.COUPLED, horizon=100, start=None,
         max_particles=DEFAULT_MAX_PARTICLES) -> FrogState:
    """Fresh state at time 0: only the start site is awake; its particles are active."""
    return FrogState(d, config or InitialConfig(), seed, mode, horizon, start, max_particles)


def run(state: FrogState, n: int) -> FrogState:
    """Advance ``state`` in place to time ``n`` (<= its horizon)."""
    return state._advance(int(n))


def step(state: FrogState) -> FrogState:
    return state._advance(state.time + 1)


def run_until(state: FrogState, targets, n: int) -> FrogState:
    """Advance until every site of ``targets`` is awake or time ``n`` is reached."""
    targets = np.atleast_2d(np.asarray(targets, dtype=np.int64))
    inside = np.array([state.box.contains(t) for t in targets], dtype=bool)
    flats = state.box.flat(targets[inside]) if inside.any() else np.zeros(0, np.int64)
    if not inside.all():
        # unreachable targets keep the run going to n
        return state._advance(int(n))
    return state._advance(int(n), flats)


def passage_times(d, config, seed, targets, horizon, mode=EngineMode.COUPLED, start=None,
                  max_particles=DEFAULT_MAX_PARTICLES) -> np.ndarray:
    """T(start, z) for every target z of one realization; -1 marks censoring at the horizon."""
    targets = np.atleast_2d(np.asarray(targets, dtype=np.int64))
    state = init(d, config, seed, mode, horizon, start, max_particles)
    run_until(state, targets, horizon)
    out = np.full(len(targets), -1, dtype=np.int64)
    for i, z in enumerate(targets):
        t = state.awaken_time(z)
        if t is not None:
            out[i] = t
    return out


def passage_time(d, config, seed, mode, target, horizon) -> int:
    """T(0, target) on one realization; raises :class:`HorizonExceeded` when censored."""
    target = as_point(target, d)
    t = passage_times(d, config, seed, [target], horizon, mode)[0]
    if t < 0:
        raise HorizonExceeded(target, horizon)
    return int(t)


def passage_time_from(store, x, target, config, horizon) -> int:
    """T(x, target) in the process started from ``x`` with the walks of ``store``.

    Processes launched from different sites on the same store share every
    particle's path, which makes T(x, z) <= T(x, y) + T(y, z) hold pathwise.
    """
    target = as_point(target, store.d)
    t = passage_times(store.d, config, store.seed, [target], horizon, EngineMode.COUPLED, x)[0]
    if t < 0:
        raise HorizonExceeded(target, horizon)
    return int(t)


# ----------------------------------------------------------------------------
# continuous time
# ----------------------------------------------------------------------------


@dataclass
class CTResult:
    """Continuous-time realization up to ``t_end``.

    Each particle jumps at the events of its own rate-1 Poisson clock; its
    k-th jump uses the same direction as the k-th step of its discrete walk.
    ``hops`` counts the jumps along the awakening chain of each site, the
    continuous-time analogue of the discrete bound T(x) >= |x|_1.
    """

    d: int
    t_end: float
    box: Box
    awake_t: np.ndarray  # flat, inf where never awakened
    hops: np.ndarray
    order: np.ndarray  # settled flat indices, in awakening order
    p_pos: np.ndarray
    p_key: np.ndarray
    p_jumps: np.ndarray
    p_origin: np.ndarray
    p_j: np.ndarray
    cap_events: int

    def times(self) -> np.ndarray:
        return self.awake_t[self.order]

    def xi(self, t: float | None = None) -> np.ndarray:
        t = self.t_end if t is None else t
        f = np.flatnonzero(self.awake_t <= t)
        return self.box.coords(f)

    def record(self) -> AwakeningRecord:
        f = np.flatnonzero(np.isfinite(self.awake_t))
        return AwakeningRecord(self.box.coords(f), self.awake_t[f].copy())

    def site_hops(self) -> tuple[np.ndarray, np.ndarray]:
        f = np.flatnonzero(np.isfinite(self.awake_t))
        return self.box.coords(f), self.hops[f].copy()

    def radius(self, t: float) -> int:
        """max |x|_1 over sites awake by time t."""
        f = self.order[self.awake_t[self.order] <= t]
        c = self.box.coords(f) - self.box.center
        return int(np.abs(c).sum(axis=1).max())

    def radius_curve(self, t_grid) -> np.ndarray:
        c = self.box.coords(self.order) - self.box.center
        r = np.maximum.accumulate(np.abs(c).sum(axis=1))
        idx = np.searchsorted(self.times(), np.asarray(t_grid, dtype=np.float64), side="right")
        return r[idx - 1]

    def first_particle_jumps(self) -> int:
        return int(self.p_jumps[0])

    def snapshot_json(self) -> str:
        f = self.order
        sites = [
            {"coords": c, "sleeping": 0, "awaken_time": float(t)}
            for c, t in zip(self.box.coords(f).tolist(), self.awake_t[f].tolist())
        ]
        return json.dumps({"time": self.t_end, "sites": sites})


def ct_run(d, config=None, seed=0, t_end=10.0, start=None, half_width=None,
           max_particles=DEFAULT_MAX_PARTICLES) -> CTResult:
    """Continuous-time realization on [0, t_end], event-driven over sites.

    The box grows (and the solve restarts) if a walk leaves it; the result
    is a deterministic function of the seed either way.
    """
    if not t_end > 0:
        raise ValueError("t_end must be > 0")
    config = config or InitialConfig()
    start = as_point(start if start is not None else (0,) * d, d)
    seed_pk, seed_cnt, _ = _seeds(seed)
    W = int(half_width) if half_width else int(math.ceil(1.5 * t_end)) + 10
    if config.variant == "heavy":
        cap = min(max_particles, 1 << 20)
    else:
        cap = min(max_particles, 1024 + diamond_size(d, W) * config.per_site)
    kind, m, inv_delta, cap_exp = config.kernel_args()
    while True:
        box = Box(d, W, start)
        awake_t = np.full(box.size, np.inf)
        hops = np.zeros(box.size, dtype=np.int64)
        order = np.zeros(box.size, dtype=np.int64)
        parts = (np.zeros(cap, np.int64), np.zeros(cap, np.uint64), np.zeros(cap, np.int64),
                 np.zeros(cap, np.int64), np.zeros(cap, np.int64))
        scal = np.zeros(3, dtype=np.int64)
        status = kernels.ct_solve(
            awake_t, hops, box.strides, box.offsets, box.W, box.center, int(box.flat(start)),
            seed_pk, seed_cnt, kind, m, inv_delta, cap_exp, float(t_end), *parts, order, scal)
        if status == kernels.BOX_OVERFLOW:
            W = int(W * 1.5) + 1
            continue
        if status == kernels.NEED_CAPACITY:
            if cap >= max_particles:
                raise MemoryError(f"more than max_particles={max_particles} particles")
            cap = min(max_particles, 4 * cap)
            continue
        n_set, n_p, cap_events = (int(v) for v in scal)
        return CTResult(d, float(t_end), box, awake_t, hops, order[:n_set],
                        *(a[:n_p] for a in parts), cap_events)
