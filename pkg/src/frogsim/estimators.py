"""Time-constant and passage-time-tail estimation over independent replicas.

Replica r of base seed s is the realization with seed ``replica_seed(s, r)``.
Censored passage times (target not awake within the horizon) are never
turned into values: slope estimates drop them and report the fraction, tail
estimates count them as lower bounds (T > horizon).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import engine
from ._hashing import replica_seed
from .lattice import as_point, l1_norm
from .srw import FitResult, linear_fit

CENSOR_LIMIT = 0.10


@dataclass(frozen=True)
class MuEstimate:
    direction: tuple[int, ...]
    n_grid: tuple[int, ...]
    slope: float
    ci: tuple[float, float]
    replicas: int
    censored_fraction: float
    means: tuple[float, ...] = field(default=())

    @property
    def unreliable(self) -> bool:
        return self.censored_fraction > CENSOR_LIMIT or math.isnan(self.slope)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci[1] - self.ci[0])

    def to_dict(self) -> dict:
        return {
            "direction": list(self.direction), "n_grid": list(self.n_grid),
            "slope": self.slope, "ci": list(self.ci), "replicas": self.replicas,
            "censored_fraction": self.censored_fraction, "means": list(self.means),
            "unreliable": self.unreliable,
        }


def _slopes(n: np.ndarray, means: np.ndarray) -> np.ndarray:
    """OLS slope of each row of ``means`` against ``n`` (NaN-free rows)."""
    x = n - n.mean()
    return (means - means.mean(axis=-1, keepdims=True)) @ x / (x @ x)


def _nanmean(a, axis):
    # all-censored columns give NaN; that case is handled by the callers
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return np.nanmean(a, axis=axis)


def bootstrap_slope_ci(n_grid, samples: np.ndarray, bootstrap: int = 1000, seed: int = 0,
                       level: float = 0.95) -> tuple[float, float]:
    """Percentile CI of the mean-vs-n slope, resampling replicas (rows; NaN = censored)."""
    n = np.asarray(n_grid, dtype=np.float64)
    rng = np.random.default_rng(seed)
    R = samples.shape[0]
    idx = rng.integers(0, R, size=(bootstrap, R))
    means = _nanmean(samples[idx], axis=1)
    ok = ~np.isnan(means).any(axis=1)
    if not ok.any():
        return math.nan, math.nan
    s = _slopes(n, means[ok])
    a = (1 - level) / 2
    return float(np.quantile(s, a)), float(np.quantile(s, 1 - a))


def passage_samples(d, targets, replicas, horizon, config=None, base_seed=0,
                    mode=engine.EngineMode.COUPLED) -> np.ndarray:
    """(replicas, len(targets)) passage times from 0, -1 where censored."""
    out = np.empty((replicas, len(targets)), dtype=np.int64)
    for r in range(replicas):
        out[r] = engine.passage_times(d, config, replica_seed(base_seed, r), targets, horizon, mode)
    return out


def estimate_mu(d, direction, n_grid, replicas, horizon_factor=3.0, config=None, base_seed=0,
                bootstrap=1000, samples: np.ndarray | None = None) -> MuEstimate:
    """Slope of mean T(0, n * direction) against n, with a replica-bootstrap CI.

    One realization per replica serves every n of the grid. A sample is
    censored when it exceeds horizon_factor * n * |direction|_1.
    """
    direction = as_point(direction, d)
    if not any(direction):
        raise ValueError("direction must be nonzero")
    n_grid = [int(v) for v in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be increasing")
    norm = l1_norm(direction)
    limits = np.array([math.floor(horizon_factor * n * norm) for n in n_grid])
    if samples is None:
        targets = np.array([[n * c for c in direction] for n in n_grid], dtype=np.int64)
        samples = passage_samples(d, targets, replicas, int(limits.max()), config, base_seed)
    T = samples.astype(np.float64)
    censored = (samples < 0) | (samples > limits)
    T[censored] = np.nan
    means = _nanmean(T, axis=0)
    if np.isnan(means).any():
        # some n has no resolved sample: no slope can be formed
        slope, ci = math.nan, (math.nan, math.nan)
    else:
        slope = float(_slopes(np.asarray(n_grid, dtype=np.float64), means[None])[0])
        ci = bootstrap_slope_ci(n_grid, T, bootstrap, seed=base_seed)
    return MuEstimate(direction, tuple(n_grid), slope, ci, samples.shape[0],
                      float(censored.mean()), tuple(float(m) for m in means))


def ci_overlap(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


def mu_norm_checks(mu_x: MuEstimate, mu_2x: MuEstimate | None = None, mu_y: MuEstimate | None = None,
                   mu_xy: MuEstimate | None = None, mu_neg_x: MuEstimate | None = None) -> dict:
    """Homogeneity, triangle inequality and reflection symmetry at CI resolution.

    Slopes are per unit n along the given direction, so mu(2x) is compared
    through mu_2x / 2 against mu_x.
    """
    out: dict = {}
    if mu_2x is not None:
        half = (mu_2x.ci[0] / 2, mu_2x.ci[1] / 2)
        out["homogeneity"] = ci_overlap(half, mu_x.ci)
    if mu_y is not None and mu_xy is not None:
        slack = 2 * max(mu_x.half_width, mu_y.half_width, mu_xy.half_width)
        out["triangle"] = mu_xy.slope <= mu_x.slope + mu_y.slope + slack
    if mu_neg_x is not None:
        out["symmetry"] = ci_overlap(mu_x.ci, mu_neg_x.ci)
    out["lower_bound"] = mu_x.slope + mu_x.half_width >= l1_norm(mu_x.direction)
    return out


@dataclass(frozen=True)
class PassageTail:
    x0: tuple[int, ...]
    n_grid: tuple[int, ...]
    tail: np.ndarray
    gamma: float | None
    gamma_ci: tuple[float, float] | None
    fit: FitResult | None
    censored_fraction: float


def tail_curve(samples: np.ndarray, n_grid) -> np.ndarray:
    """P[T >= n]; censored samples (-1) count as exceeding every n up to the horizon."""
    big = np.where(samples < 0, np.iinfo(np.int64).max, samples)
    return np.array([np.count_nonzero(big >= n) for n in n_grid]) / len(samples)


def _gamma_fit(n_grid, tail):
    n_grid = np.asarray(n_grid, dtype=np.float64)
    ok = (tail > 0) & (tail < 1)
    if ok.sum() < 2:
        return None
    return linear_fit(np.log(n_grid[ok]), np.log(-np.log(tail[ok])))


def passage_tail_diag(d, x0, n_grid, replicas, base_seed=0, config=None, bootstrap=500,
                      samples: np.ndarray | None = None) -> PassageTail:
    """Empirical tail of T(0, x0) and the stretched-exponential exponent fit.

    log(-log P[T >= n]) is regressed on log n; the slope is the exponent
    estimate gamma_hat. Its CI comes from resampling replicas.
    """
    if replicas < 10_000 and samples is None:
        raise ValueError("replicas must be >= 10^4")
    x0 = as_point(x0, d)
    n_grid = [int(v) for v in n_grid]
    horizon = max(n_grid)
    if samples is None:
        samples = passage_samples(d, np.array([x0]), replicas, horizon, config, base_seed)[:, 0]
    tail = tail_curve(samples, n_grid)
    fit = _gamma_fit(n_grid, tail)
    gamma_ci = None
    if fit is not None:
        rng = np.random.default_rng(base_seed)
        boots = []
        for _ in range(bootstrap):
            res = samples[rng.integers(0, len(samples), len(samples))]
            f = _gamma_fit(n_grid, tail_curve(res, n_grid))
            if f is not None:
                boots.append(f.slope)
        gamma_ci = (float(np.quantile(boots, 0.025)), float(np.quantile(boots, 0.975)))
    return PassageTail(x0, tuple(n_grid), tail, None if fit is None else fit.slope, gamma_ci, fit,
                       float(np.mean(samples < 0)))
