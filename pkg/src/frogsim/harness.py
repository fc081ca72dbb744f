"""Experiment orchestration: configuration, replica scheduling and persistence.

A run is fully determined by its :class:`ExperimentConfig` and the package
version. Replica r uses seed ``replica_seed(config.seed, r)``, so any single
replica can be recomputed in isolation (see :func:`replica_rows`). Replicas may
run in a process pool; rows are always written in replica order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import shutil
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, engine, estimators, regimes, shape, srw, walks
from ._backend import BACKEND
from ._hashing import replica_seed, replica_seeds
from .engine import EngineMode, InitialConfig
from .lattice import as_point
from .svg import render_shape_svg

SCHEMA_VERSION = 1
EXPERIMENTS = ("simulate", "mu", "shape", "flat-edge", "full-diamond", "srw-validate", "ct")
MODES = tuple(m.value for m in EngineMode)

# experiment -> allowed params with defaults (None = derived from other fields)
PARAMS = {
    "simulate": {},
    "mu": {"direction": None, "n_grid": [20, 40, 60, 80, 100], "bootstrap": 1000},
    "shape": {"eps": 0.15, "symmetry_tol": 0.05},
    "flat-edge": {},
    "full-diamond": {},
    "srw-validate": {},
    "ct": {"t_grid": None},
}
NEEDS_N = {"simulate", "shape", "flat-edge", "full-diamond", "srw-validate"}
DEFAULT_N = {"simulate": 50, "shape": 100, "flat-edge": 100, "full-diamond": 100, "srw-validate": 10}
DEFAULT_INITIAL = {"flat-edge": {"variant": "m", "m": 16},
                   "full-diamond": {"variant": "heavy", "delta": 1.0, "cap_exponent": 20}}
SRW_BLOCK = 10_000


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass
class ExperimentConfig:
    experiment: str
    d: int = 2
    mode: str = "coupled"
    initial: dict = field(default_factory=lambda: {"variant": "one"})
    seed: int = 0
    replicas: int = 1
    n: int | None = None
    t_end: float | None = None
    horizon_factor: float = 3.0
    out: str = "frogsim-out"
    workers: int = 1
    params: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def default(cls, experiment: str) -> "ExperimentConfig":
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}")
        cfg = cls(experiment, n=DEFAULT_N.get(experiment), t_end=50.0 if experiment == "ct" else None)
        if experiment in DEFAULT_INITIAL:
            cfg.initial = dict(DEFAULT_INITIAL[experiment])
        return cfg

    def validate(self) -> "ExperimentConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.schema_version == SCHEMA_VERSION,
             f"unsupported schema_version {self.schema_version!r} (expected {SCHEMA_VERSION})")
        need(self.experiment in EXPERIMENTS, f"unknown experiment {self.experiment!r}")
        need(_is_int(self.d) and self.d >= 1, "d must be a positive integer")
        need(self.mode in MODES, f"mode must be one of {MODES}")
        need(_is_int(self.seed) and self.seed >= 0, "seed must be a non-negative integer")
        need(_is_int(self.replicas) and self.replicas >= 1, "replicas must be a positive integer")
        need(_is_int(self.workers) and self.workers >= 1, "workers must be a positive integer")
        need(isinstance(self.horizon_factor, (int, float)) and self.horizon_factor >= 1,
             "horizon_factor must be >= 1")
        need(isinstance(self.out, str) and self.out != "", "out must be a non-empty path")
        need(isinstance(self.initial, dict), "initial must be an object")
        try:
            init = InitialConfig.from_dict(self.initial)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"initial: {e}") from None
        need(isinstance(self.params, dict), "params must be an object")
        unknown = set(self.params) - set(PARAMS[self.experiment])
        need(not unknown, f"unknown params for {self.experiment}: {sorted(unknown)}")
        exp = self.experiment
        if exp in NEEDS_N:
            need(_is_int(self.n) and self.n >= 0, f"{exp} needs an integer n >= 0")
        if exp == "ct":
            need(isinstance(self.t_end, (int, float)) and self.t_end > 0, "ct needs t_end > 0")
            grid = self.params.get("t_grid")
            if grid is not None:
                need(isinstance(grid, list) and len(grid) >= 2 and all(0 < t <= self.t_end for t in grid)
                     and grid == sorted(set(grid)), "t_grid must be increasing values in (0, t_end]")
        if exp == "mu":
            grid = self.params.get("n_grid", PARAMS["mu"]["n_grid"])
            need(isinstance(grid, list) and len(grid) >= 2 and all(_is_int(v) and v >= 1 for v in grid)
                 and grid == sorted(set(grid)), "n_grid must be increasing positive integers")
            direction = self.params.get("direction")
            if direction is not None:
                need(isinstance(direction, list) and len(direction) == self.d
                     and all(_is_int(c) for c in direction) and any(direction),
                     "direction must be a nonzero integer vector of length d")
        if self.n is not None:
            need(_is_int(self.n) and self.n >= 0, "n must be an integer >= 0")
        if self.t_end is not None:
            need(isinstance(self.t_end, (int, float)) and not isinstance(self.t_end, bool),
                 "t_end must be a number")
        if exp == "shape":
            need(0 <= self.params.get("eps", 0.15) < 1, "eps must be in [0, 1)")
        if exp == "flat-edge":
            need(self.d == 2, "flat-edge needs d = 2")
            need(init.variant == "m" and init.m >= 2 and init.m % 2 == 0,
                 "flat-edge needs initial variant m with even m >= 2")
        if exp == "full-diamond":
            need(init.variant == "heavy", "full-diamond needs initial variant heavy")
            need(0 < init.delta < self.d, "full-diamond needs 0 < delta < d")
            need(self.n >= 1, "full-diamond needs n >= 1")
        return self

    def initial_config(self) -> InitialConfig:
        return InitialConfig.from_dict(self.initial)

    def param(self, key):
        return self.params.get(key, PARAMS[self.experiment][key])

    def to_dict(self) -> dict:
        return asdict(self)

    def emit(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config needs an experiment")
        try:
            return cls(**data).validate()
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
        return cls.from_dict(data)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


@dataclass
class RunManifest:
    config: dict
    artifact_version: str
    backend: str
    wall_clock_seconds: float
    replica_seeds: list
    files: dict
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------------------
# per-replica work
# ----------------------------------------------------------------------------


def _mu_setup(cfg):
    direction = as_point(cfg.param("direction") or [1] + [0] * (cfg.d - 1), cfg.d)
    grid = [int(v) for v in cfg.param("n_grid")]
    norm = sum(abs(c) for c in direction)
    horizon = math.floor(cfg.horizon_factor * grid[-1] * norm)
    targets = np.array([[n * c for c in direction] for n in grid], dtype=np.int64)
    return direction, grid, horizon, targets


def _t_grid(cfg) -> list[float]:
    grid = cfg.param("t_grid")
    if grid is not None:
        return [float(t) for t in grid]
    return [float(cfg.t_end) * k / 8 for k in range(1, 9)]


def _replica(cfg: ExperimentConfig, r: int) -> tuple[dict, object]:
    """Row of replica r and, for replica 0 of d = 2 runs, a snapshot to render."""
    seed = replica_seed(cfg.seed, r)
    exp = cfg.experiment
    init = cfg.initial_config()
    mode = EngineMode(cfg.mode)
    row: dict = {"seed": seed, "replica": r}
    snap = None
    if exp == "simulate":
        st = engine.init(cfg.d, init, seed, mode, horizon=cfg.n)
        engine.run(st, cfg.n)
        xi = st.xi()
        row.update(n=cfg.n, xi_size=len(xi), max_l1=int(np.abs(xi - st.box.center).sum(axis=1).max()),
                   active=st.active_total(), cap_events=st.cap_events)
        if r == 0 and cfg.d == 2:
            snap = shape.snapshot(st)
    elif exp == "mu":
        _, grid, horizon, targets = _mu_setup(cfg)
        T = engine.passage_times(cfg.d, init, seed, targets, horizon, mode)
        row.update({f"T_{n}": int(t) for n, t in zip(grid, T)})
    elif exp == "shape":
        n = cfg.n
        st = engine.init(cfg.d, init, seed, mode, horizon=2 * n)
        engine.run(st, 2 * n)
        s_n, s_2n = shape.snapshot(st, n), shape.snapshot(st, 2 * n)
        row.update(n=n, xi_size=len(s_n.xi), sandwich_margin=shape.sandwich_margin(s_n, s_2n),
                   sandwich_pass=shape.sandwich_check(s_n, s_2n, cfg.param("eps")),
                   hull_in_padded_diamond=shape.hull_within_padded_diamond(s_n),
                   inner_radius_ratio=shape.smallball_fit(s_n))
        if cfg.d == 2:
            row.update(symmetry_rms=shape.symmetry_defect(s_n, "rms"),
                       symmetry_sup=shape.symmetry_defect(s_n, "sup"),
                       symmetry_pass=shape.symmetry_check(s_n, cfg.param("symmetry_tol")))
            if r == 0:
                snap = s_n
    elif exp == "flat-edge":
        row.update(regimes.flat_edge_replica(seed, init.m, cfg.n))
    elif exp == "full-diamond":
        row.update(regimes.full_diamond_replica(seed, init.delta, cfg.d, cfg.n, init.cap_exponent))
    elif exp == "ct":
        grid = _t_grid(cfg)
        res = regimes.ct_replica(seed, cfg.d, grid, init)
        row.update({f"radius_{t:g}": int(v) for t, v in zip(grid, res.pop("radii"))})
        row.update(res)
    else:  # pragma: no cover - validated
        raise ConfigError(exp)
    return row, snap


def _srw_block(cfg: ExperimentConfig, lo: int, hi: int) -> list[dict]:
    seeds = [int(s) for s in replica_seeds(cfg.seed, hi)[lo:]]
    keys = walks.replica_walk_keys(cfg.d, cfg.seed, hi)[lo:]
    ends = walks.endpoints(cfg.d, cfg.n, keys)
    sup = walks.sup_sq_displacements(cfg.d, cfg.n, keys)
    rng = walks.ranges(cfg.d, cfg.n, keys)
    rows = []
    for i, r in enumerate(range(lo, hi)):
        row = {"seed": seeds[i], "replica": r}
        row.update({f"x{k + 1}": int(ends[i, k]) for k in range(cfg.d)})
        row.update(sup_sq=int(sup[i]), range=int(rng[i]))
        rows.append(row)
    return rows


def _work(args) -> tuple[list[dict], object]:
    cfg, lo, hi = args
    if cfg.experiment == "srw-validate":
        return _srw_block(cfg, lo, hi), None
    rows, snap = [], None
    for r in range(lo, hi):
        row, s = _replica(cfg, r)
        rows.append(row)
        snap = snap if s is None else s
    return rows, snap


def replica_rows(cfg: ExperimentConfig, r: int) -> dict:
    """Recompute the row of replica r alone."""
    cfg.validate()
    return _work((cfg, r, r + 1))[0][0]


def _blocks(cfg):
    size = SRW_BLOCK if cfg.experiment == "srw-validate" else 1
    return [(cfg, lo, min(lo + size, cfg.replicas)) for lo in range(0, cfg.replicas, size)]


def _run_replicas(cfg) -> tuple[list[dict], object]:
    blocks = _blocks(cfg)
    if cfg.workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_work, blocks, chunksize=1))
    else:
        parts = [_work(b) for b in blocks]
    rows = [row for part, _ in parts for row in part]
    snaps = [s for _, s in parts if s is not None]
    return rows, (snaps[0] if snaps else None)


# ----------------------------------------------------------------------------
# summaries
# ----------------------------------------------------------------------------


def _summary(cfg, rows) -> dict:
    exp = cfg.experiment
    col = lambda k: np.array([r[k] for r in rows])  # noqa: E731
    out: dict = {"experiment": exp, "replicas": len(rows)}
    if exp == "simulate":
        out.update(mean_xi_size=float(col("xi_size").mean()), mean_max_l1=float(col("max_l1").mean()))
    elif exp == "mu":
        direction, grid, _, _ = _mu_setup(cfg)
        samples = np.array([[r[f"T_{n}"] for n in grid] for r in rows], dtype=np.int64)
        est = estimators.estimate_mu(cfg.d, direction, grid, len(rows), cfg.horizon_factor,
                                     base_seed=cfg.seed, bootstrap=cfg.param("bootstrap"), samples=samples)
        out.update(est.to_dict())
    elif exp == "shape":
        out.update(sandwich_pass_fraction=float(col("sandwich_pass").mean()),
                   hull_in_padded_diamond=bool(col("hull_in_padded_diamond").all()),
                   mean_inner_radius_ratio=float(col("inner_radius_ratio").mean()))
        if cfg.d == 2:
            out.update(symmetry_pass_fraction=float(col("symmetry_pass").mean()))
    elif exp == "flat-edge":
        out.update(violations=int(col("violations").sum()), reach_fraction=float(col("reaches").mean()),
                   beta_hat_median=float(np.median(col("beta_hat"))))
    elif exp == "full-diamond":
        cov, base = col("coverage"), col("baseline_coverage")
        out.update(mean_coverage=float(cov.mean()), baseline_mean_coverage=float(base.mean()),
                   win_fraction=float(np.mean(cov > base)), cap_events=int(col("cap_events").sum()))
    elif exp == "srw-validate":
        ends = np.array([[r[f"x{k + 1}"] for k in range(cfg.d)] for r in rows])
        sites, counts = np.unique(ends, axis=0, return_counts=True)
        table = srw.exact_pn(cfg.d, cfg.n)
        expected = np.array([table(s) for s in sites]) * len(rows)
        ok = expected > 0
        out.update(support_ok=bool(ok.all()), endpoint_chi2_p=srw.chi_square_gof(counts[ok], expected[ok]),
                   mean_range=float(col("range").mean()), mean_sup_sq=float(col("sup_sq").mean()))
    elif exp == "ct":
        grid = _t_grid(cfg)
        radii = np.array([[r[f"radius_{t:g}"] for t in grid] for r in rows], dtype=np.float64)
        mean_r = radii.mean(axis=0)
        fit = srw.linear_fit(np.log(grid), np.log(np.maximum(mean_r, 1e-12)))
        out.update(t_grid=grid, mean_radius=mean_r.tolist(), loglog_slope=fit.slope,
                   invariants=bool(col("invariants").all()), conserved=bool(col("conserved").all()))
    return out


# ----------------------------------------------------------------------------
# persistence
# ----------------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(int(v)) if isinstance(v, (int, np.integer)) else str(v)


def results_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r[k]) for k in header])
    return buf.getvalue()


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_experiment(cfg: ExperimentConfig, out: str | Path | None = None) -> RunManifest:
    """Run ``cfg`` and write results.csv, summary.json, optional shape.svg and manifest.json.

    The manifest is written last; if anything fails, every file this call
    wrote is removed (and the output directory, when this call created it).
    """
    cfg.validate()
    out_dir = Path(out if out is not None else cfg.out)
    created = not out_dir.exists()
    written: list[Path] = []
    t0 = time.perf_counter()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        rows, snap = _run_replicas(cfg)
        docs = {"results.csv": results_csv(rows),
                "summary.json": json.dumps(_summary(cfg, rows), indent=2, sort_keys=True, default=_plain) + "\n"}
        if snap is not None:
            docs["shape.svg"] = render_shape_svg(snap)
        for name, text in docs.items():
            p = out_dir / name
            written.append(p)
            p.write_text(text)
        manifest = RunManifest(
            config=cfg.to_dict(), artifact_version=__version__, backend=BACKEND,
            wall_clock_seconds=round(time.perf_counter() - t0, 3),
            replica_seeds=[r["seed"] for r in rows],
            files={name: sha256_file(out_dir / name) for name in sorted(docs)},
        )
        p = out_dir / "manifest.json"
        written.append(p)
        p.write_text(manifest.to_json())
        return manifest
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        if created and out_dir.exists():
            shutil.rmtree(out_dir, ignore_errors=True)
        raise
