"""Single simple-random-walk numerics: exact tables, asymptotics, Monte Carlo checks.

Exact distributions come from a dense dynamic program on the cube
[-n, n]^d; return probabilities for long times use the exact coordinate
splitting p^(d)_n(0) = sum_k C(n,k) (1/d)^k (1-1/d)^(n-k) p^(1)_k(0) p^(d-1)_(n-k)(0)
in log space. These tables are the oracles the Monte Carlo estimates are
checked against.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from scipy.special import gammaln, logsumexp

from . import walks

# ----------------------------------------------------------------------------
# exact tables
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbTable:
    """p_n(x) = P[S_n = x] on the cube [-W, W]^d (dense array, axis i is coordinate i)."""

    d: int
    n: int
    W: int
    probs: np.ndarray

    def __call__(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        if np.any(np.abs(x) > self.W):
            return 0.0
        return float(self.probs[tuple(x + self.W)])

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Sites with p_n(x) > 0 (lexicographic) and their probabilities."""
        idx = np.argwhere(self.probs > 0)
        return idx - self.W, self.probs[tuple(idx.T)]

    def to_csv(self) -> str:
        sites, p = self.support()
        return "".join(",".join(map(str, s)) + f",{v!r}\n" for s, v in zip(sites.tolist(), p.tolist()))


def _dp_step(p: np.ndarray) -> np.ndarray:
    d = p.ndim
    out = np.zeros_like(p)
    inner = (slice(1, -1),) * d
    for ax in range(d):
        lo = [slice(1, -1)] * d
        hi = [slice(1, -1)] * d
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        out[inner] += p[tuple(lo)] + p[tuple(hi)]
    return out / (2 * d)


def exact_tables(d: int, n_values: Sequence[int], window: int | None = None):
    """Yield ProbTables for each n in ``n_values`` (sorted) from a single DP pass."""
    n_values = sorted(int(n) for n in n_values)
    if not n_values or n_values[0] < 0:
        raise ValueError("n values must be non-negative")
    n_max = n_values[-1]
    W = n_max if window is None else int(window)
    if W < n_max:
        raise ValueError(f"window {W} does not contain D_{n_max}")
    # one cell of zero padding on each side keeps the stencil inside the array
    p = np.zeros((2 * W + 3,) * d)
    p[(W + 1,) * d] = 1.0
    want = set(n_values)
    for k in range(n_max + 1):
        if k > 0:
            p = _dp_step(p)
        if k in want:
            yield ProbTable(d, k, W, p[(slice(1, -1),) * d].copy())


def exact_pn(d: int, n: int, window: int | None = None) -> ProbTable:
    """Exact law of S_n; ``window`` is the half-width of the cube and must be >= n."""
    return next(exact_tables(d, [n], window))


def log_return_prob_1d(n: np.ndarray) -> np.ndarray:
    """log p^(1)_n(0); -inf for odd n."""
    n = np.asarray(n, dtype=np.float64)
    out = gammaln(n + 1) - 2 * gammaln(n / 2 + 1) - n * math.log(2.0)
    return np.where(np.mod(n, 2) == 0, out, -np.inf)


def return_probabilities(d: int, n_max: int) -> np.ndarray:
    """p^(d)_n(0) for n = 0..n_max via exact splitting into coordinate directions."""
    ns = np.arange(n_max + 1)
    log1 = log_return_prob_1d(ns)
    logp = log1
    for dd in range(2, d + 1):
        q = 1.0 / dd
        new = np.full(n_max + 1, -np.inf)
        for n in range(0, n_max + 1, 2):
            k = np.arange(0, n + 1, 2)
            terms = (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
                     + k * math.log(q) + (n - k) * math.log1p(-q) + log1[k] + logp[n - k])
            new[n] = logsumexp(terms)
        logp = new
    return np.exp(logp)


# ----------------------------------------------------------------------------
# local CLT
# ----------------------------------------------------------------------------


def clt_pn(d: int, n: int, x) -> float:
    """Leading local-CLT term 2 (d / (2 pi n))^(d/2) exp(-d |x|^2 / (2n)).

    The factor 2 is the parity weight: only sites with |x|_1 = n (mod 2) are
    reachable, and the term is defined on those sites only.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    if len(x) != d:
        raise ValueError("point has wrong dimension")
    if int(np.abs(x).sum()) % 2 != n % 2:
        raise ValueError(f"parity of {tuple(x.tolist())} does not match n={n}")
    r2 = float((x.astype(np.float64) ** 2).sum())
    return 2.0 * (d / (2 * math.pi * n)) ** (d / 2) * math.exp(-d * r2 / (2 * n))


def _clt_grid(table: ProbTable) -> tuple[np.ndarray, np.ndarray]:
    """(exact, clt) on the admissible-parity sites of the table's cube."""
    d, n, W = table.d, table.n, table.W
    axes = np.arange(-W, W + 1)
    grids = np.meshgrid(*([axes] * d), indexing="ij")
    l1 = sum(np.abs(g) for g in grids)
    r2 = sum(g.astype(np.float64) ** 2 for g in grids)
    mask = (l1 % 2) == (n % 2)
    clt = 2.0 * (d / (2 * math.pi * n)) ** (d / 2) * np.exp(-d * r2 / (2 * n))
    return table.probs[mask], clt[mask]


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def linear_fit(x, y) -> FitResult:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(float(slope), float(intercept), r2)


def clt_max_errors(d: int, n_grid: Sequence[int]) -> np.ndarray:
    """max over admissible x of |p_n(x) - clt_pn(d, n, x)| for each n of the grid."""
    out = {}
    for table in exact_tables(d, n_grid):
        ex, clt = _clt_grid(table)
        out[table.n] = float(np.abs(ex - clt).max())
    return np.array([out[int(n)] for n in n_grid])


def clt_error_fit(d: int, n_grid: Sequence[int]) -> FitResult:
    """Slope of log max-error against log n; the error decays like n^(-(d+2)/2)."""
    n_grid = [int(n) for n in n_grid]
    if any(n < 1 for n in n_grid) or max(n_grid) < 10 * min(n_grid):
        raise ValueError("n_grid must be positive and span at least one decade")
    err = clt_max_errors(d, n_grid)
    return linear_fit(np.log(n_grid), np.log(err))


# ----------------------------------------------------------------------------
# Green's function and escape probability
# ----------------------------------------------------------------------------


def _kahan_cumsum(values: np.ndarray) -> np.ndarray:
    out = np.empty(len(values))
    s = 0.0
    c = 0.0
    for i, v in enumerate(values):
        y = v - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i] = s
    return out


def green_table(d: int, n: int) -> ProbTable:
    """G_n(x) = sum_{j<=n} p_j(x) on [-n, n]^d, accumulated with Kahan compensation."""
    acc = None
    comp = None
    for table in exact_tables(d, range(n + 1), window=n):
        if acc is None:
            acc = np.zeros_like(table.probs)
            comp = np.zeros_like(table.probs)
        y = table.probs - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return ProbTable(d, n, n, acc)


def green_fn(d: int, n: int, x) -> float:
    """Expected number of visits to x by time n (walk started at 0)."""
    return green_table(d, n)(x)


def green_origin_curve(d: int, n_max: int) -> np.ndarray:
    """G_n(0) for n = 0..n_max."""
    return _kahan_cumsum(return_probabilities(d, n_max))


def green_origin_limit(d: int, n_max: int = 10000) -> float:
    """G_inf(0) for d >= 3: exact partial sum plus the local-CLT tail beyond n_max.

    The tail sum over even n > N of 2 (d/(2 pi n))^(d/2) is approximated by
    its integral, (d/(2 pi))^(d/2) * 2 / ((d-2) N^((d-2)/2)).
    """
    if d < 3:
        raise ValueError("the walk is recurrent for d < 3")
    N = n_max - (n_max % 2)
    partial = green_origin_curve(d, N)[-1]
    tail = (d / (2 * math.pi)) ** (d / 2) * 2.0 / ((d - 2) * N ** ((d - 2) / 2))
    return float(partial + tail)


def escape_probability(d: int, n_max: int = 10000) -> float:
    """P[the walk never returns to 0] = 1 / G_inf(0)."""
    return 1.0 / green_origin_limit(d, n_max)


# ----------------------------------------------------------------------------
# Monte Carlo over the walk kernel
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Proportion:
    """Binomial frequency with its standard error and a 95% Wilson interval."""

    estimate: float
    sigma: float
    lo: float
    hi: float
    replicas: int


def proportion(successes: int, trials: int, z: float = 1.959964) -> Proportion:
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    sigma = math.sqrt(p * (1 - p) / trials)
    den = 1 + z * z / trials
    mid = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return Proportion(p, sigma, max(0.0, mid - half), min(1.0, mid + half), trials)


def chi_square_gof(observed, expected, min_expected: float = 5.0) -> float:
    """Pearson goodness-of-fit p-value; cells expecting < min_expected are pooled into one."""
    observed = np.asarray(observed, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    expected = expected * observed.sum() / expected.sum()
    small = expected < min_expected
    if small.any():
        observed = np.append(observed[~small], observed[small].sum())
        expected = np.append(expected[~small], expected[small].sum())
    if len(observed) < 2:
        return 1.0
    return float(stats.chisquare(observed, expected).pvalue)


def chi_square_two_sample(a, b, min_expected: float = 5.0) -> float:
    """Homogeneity p-value for two integer samples; sparse categories are pooled into one."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    cats, inv = np.unique(np.concatenate([a, b]), return_inverse=True)
    table = np.zeros((2, len(cats)))
    np.add.at(table, (np.repeat([0, 1], [len(a), len(b)]), inv), 1)
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / table.sum()
    sparse = expected.min(axis=0) < min_expected
    if sparse.any():
        table = np.column_stack([table[:, ~sparse], table[:, sparse].sum(axis=1)])
    if table.shape[1] < 2:
        return 1.0
    return float(stats.chi2_contingency(table, correction=False).pvalue)


def endpoint_counts(d: int, n: int, replicas: int, base_seed: int = 0):
    """Empirical law of S_n over replica walks: (sites, counts) lexicographic."""
    ends = walks.endpoints(d, n, walks.replica_walk_keys(d, base_seed, replicas))
    sites, counts = np.unique(ends, axis=0, return_counts=True)
    return sites, counts


def hitting_prob_mc(d: int, n: int, x, replicas: int, base_seed: int = 0) -> Proportion:
    """Estimate q(n, x) = P[the walk from 0 visits x by time n]."""
    if replicas < 1000:
        raise ValueError("replicas must be >= 1000")
    keys = walks.replica_walk_keys(d, base_seed, replicas)
    t = walks.hitting_times(d, n, x, keys)
    return proportion(int(np.count_nonzero(t >= 0)), replicas)


def hitting_curve(d: int, n_values: Sequence[int], x, replicas: int, base_seed: int = 0):
    """q̂(n, x) for several n on one replica set (nested events, so nondecreasing)."""
    keys = walks.replica_walk_keys(d, base_seed, replicas)
    t = walks.hitting_times(d, int(max(n_values)), x, keys)
    return [proportion(int(np.count_nonzero((t >= 0) & (t <= n))), replicas) for n in n_values]


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    sem: float
    replicas: int


def range_mc(d: int, n: int, replicas: int, base_seed: int = 0) -> MeanEstimate:
    """Mean number of distinct sites visited by the walk up to time n."""
    if replicas < 100:
        raise ValueError("replicas must be >= 100")
    r = walks.ranges(d, n, walks.replica_walk_keys(d, base_seed, replicas)).astype(np.float64)
    return MeanEstimate(float(r.mean()), float(r.std(ddof=1) / math.sqrt(replicas)), replicas)


@dataclass(frozen=True)
class TailCurve:
    t_grid: np.ndarray
    tail: np.ndarray
    fit: FitResult | None


def sup_tail_mc(d: int, n: int, t_grid: Sequence[float], replicas: int, base_seed: int = 0) -> TailCurve:
    """Empirical P[max_{i<=n} |S_i| >= t sqrt(n)] and the slope of log-tail against t.

    The fit uses the grid points where the empirical tail is positive.
    """
    if replicas < 10_000:
        raise ValueError("replicas must be >= 10^4")
    t_grid = np.asarray(t_grid, dtype=np.float64)
    sup_sq = walks.sup_sq_displacements(d, n, walks.replica_walk_keys(d, base_seed, replicas))
    # compare squared integers to avoid rounding at the threshold
    thresh = (t_grid**2) * n
    tail = np.array([np.count_nonzero(sup_sq >= th) for th in thresh]) / replicas
    ok = tail > 0
    fit = linear_fit(t_grid[ok], np.log(tail[ok])) if ok.sum() >= 2 else None
    return TailCurve(t_grid, tail, fit)


# ----------------------------------------------------------------------------
# large deviations and elementary inequalities
# ----------------------------------------------------------------------------


def _kl(a: float, p: float) -> float:
    def term(u, v):
        return 0.0 if u == 0 else u * math.log(u / v)

    return term(a, p) + term(1 - a, 1 - p)


def rate_H(a: float, p: float) -> float:
    """Binomial large-deviation rate a log(a/p) + (1-a) log((1-a)/(1-p)), for 0 < p < a < 1."""
    if not (0 < p < a < 1):
        raise ValueError(f"need 0 < p < a < 1, got a={a}, p={p}")
    return _kl(a, p)


@dataclass(frozen=True)
class TailBound:
    exact: float
    bound: float
    log_exact: float
    log_bound: float

    @property
    def holds(self) -> bool:
        # log-space comparison with a few ulps of slack
        return self.log_exact <= self.log_bound + 1e-12 * max(1.0, abs(self.log_bound))


def binomial_tail_check(N: int, p: float, a: float) -> TailBound:
    """Exact P[Bin(N, p) >= aN] (log-space summation) paired with exp(-N H(a, p))."""
    if not (0 < p < a < 1):
        raise ValueError(f"need 0 < p < a < 1, got a={a}, p={p}")
    if not (1 <= N <= 10_000):
        raise ValueError("N must be in [1, 10^4]")
    k0 = math.ceil(round(a * N, 9))
    k = np.arange(k0, N + 1, dtype=np.float64)
    logs = (gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)
            + k * math.log(p) + (N - k) * math.log1p(-p))
    log_exact = float(logsumexp(logs)) if len(k) else -math.inf
    log_bound = -N * rate_H(a, p)
    return TailBound(math.exp(log_exact), math.exp(log_bound), log_exact, log_bound)


@dataclass(frozen=True)
class MarkovCheck:
    """Outcome of the check P[X >= b/2] >= b/(2a) for 0 < X <= a with E X >= b."""

    holds: bool
    frequency: float
    bound: float
    slack: float
    preconditions_met: bool
    reason: str = ""

    def __bool__(self):
        return self.holds


def markov_half_mean_check(samples, a: float, b: float, slack: float | None = None) -> MarkovCheck:
    """Empirical check of P[X >= b/2] >= b/(2a); slack defaults to 3 binomial standard errors."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("no samples")
    bound = b / (2 * a)
    freq = float(np.count_nonzero(x >= b / 2) / x.size)
    if slack is None:
        slack = 3 * math.sqrt(max(bound * (1 - bound), 0.0) / x.size)
    problems = []
    if x.max() > a:
        problems.append(f"max {x.max()} exceeds a={a}")
    if x.mean() < b:
        problems.append(f"mean {x.mean()} below b={b}")
    if problems:
        return MarkovCheck(False, freq, bound, slack, False, "; ".join(problems))
    return MarkovCheck(freq >= bound - slack, freq, bound, slack, True)


def stretched_exp_sampler(alpha: float) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Sampler of X = ceil(E^(1/alpha)), E ~ Exp(1): P[X > k] = exp(-k^alpha), X >= 1."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")

    def sample(rng, size):
        e = rng.exponential(size=size)
        return np.maximum(1, np.ceil(e ** (1.0 / alpha))).astype(np.int64)

    return sample


def stretched_exp_mean(alpha: float, terms: int = 100_000) -> float:
    """E X for :func:`stretched_exp_sampler`: sum_{k>=0} exp(-k^alpha)."""
    k = np.arange(terms, dtype=np.float64)
    return float(math.fsum(np.exp(-(k**alpha))))


def nagaev_sum_tail_mc(sampler, n: int, a: float, replicas: int, seed: int = 0, batch: int = 20_000) -> Proportion:
    """Empirical P[X_1 + ... + X_n >= a n] for i.i.d. draws from ``sampler``."""
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < replicas:
        m = min(batch, replicas - done)
        sums = sampler(rng, (m, n)).sum(axis=1)
        hits += int(np.count_nonzero(sums >= a * n))
        done += m
    return proportion(hits, replicas)


def stretched_exp_envelope(n_grid, tails) -> FitResult | None:
    """Fit log(-log tail) = beta log n + c over points with 0 < tail < 1."""
    n_grid = np.asarray(n_grid, dtype=np.float64)
    tails = np.asarray(tails, dtype=np.float64)
    ok = (tails > 0) & (tails < 1)
    if ok.sum() < 2:
        return None
    return linear_fit(np.log(n_grid[ok]), np.log(-np.log(tails[ok])))
