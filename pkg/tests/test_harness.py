import csv
import io
import json
import shutil
import subprocess

import pytest
from hypothesis import given
from hypothesis import strategies as st

from frogsim import cli, harness
from frogsim.harness import ConfigError, ExperimentConfig, run_experiment

SMALL = {
    "simulate": dict(n=12, replicas=3),
    "mu": dict(replicas=4, params={"n_grid": [4, 8, 12], "bootstrap": 50}),
    "shape": dict(n=10, replicas=3),
    "flat-edge": dict(n=20, replicas=3),
    "full-diamond": dict(n=12, replicas=2),
    "srw-validate": dict(n=6, replicas=500),
    "ct": dict(t_end=6.0, replicas=3),
}


def small_config(exp, **kw):
    cfg = ExperimentConfig.default(exp)
    for k, v in {**SMALL[exp], **kw}.items():
        setattr(cfg, k, v)
    return cfg.validate()


def read_bytes(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "manifest.json"}


@given(st.sampled_from(harness.EXPERIMENTS), st.integers(0, 2**40), st.integers(1, 1000),
       st.integers(1, 4), st.sampled_from(["coupled", "aggregated"]))
def test_config_roundtrip(exp, seed, replicas, workers, mode):
    cfg = ExperimentConfig.default(exp)
    cfg.seed, cfg.replicas, cfg.workers, cfg.mode = seed, replicas, workers, mode
    cfg.validate()
    assert ExperimentConfig.parse(cfg.emit()) == cfg
    assert ExperimentConfig.parse(cfg.emit()).emit() == cfg.emit()


@pytest.mark.parametrize("patch, msg", [
    ({"replicas": 0}, "replicas"),
    ({"bogus": 1}, "unknown config keys"),
    ({"schema_version": 99}, "schema_version"),
    ({"experiment": "nope"}, "unknown experiment"),
    ({"initial": {"variant": "one", "x": 1}}, "initial"),
    ({"params": {"zzz": 1}}, "unknown params"),
    ({"d": 0}, "d must"),
    ({"mode": "fast"}, "mode"),
    ({"n": None}, "needs an integer n"),
    ({"replicas": True}, "replicas"),
])
def test_config_validation(patch, msg):
    data = ExperimentConfig.default("simulate").to_dict()
    data.update(patch)
    with pytest.raises(ConfigError, match=msg):
        ExperimentConfig.from_dict(data)


def test_experiment_specific_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("flat-edge", n=10, initial={"variant": "one"}).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("flat-edge", n=10, d=3, initial={"variant": "m", "m": 4}).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("full-diamond", n=10, initial={"variant": "heavy", "delta": 3.0}).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("ct", t_end=None).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("ct", t_end=10.0, params={"t_grid": [5.0, 2.0]}).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("mu", params={"n_grid": [5, 5]}).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.parse("{not json")


@pytest.mark.parametrize("exp", harness.EXPERIMENTS)
def test_run_is_deterministic_and_digests_match(tmp_path, exp):
    cfg = small_config(exp)
    m1 = run_experiment(cfg, tmp_path / "a")
    m2 = run_experiment(cfg, tmp_path / "b")
    a, b = read_bytes(tmp_path / "a"), read_bytes(tmp_path / "b")
    assert a == b
    assert set(m1.files) == set(a)
    for name, digest in m1.files.items():
        assert harness.sha256_file(tmp_path / "a" / name) == digest
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["config"] == cfg.to_dict() and man["artifact_version"] == harness.__version__
    assert len(man["replica_seeds"]) == cfg.replicas and m2.replica_seeds == m1.replica_seeds
    rows = list(csv.DictReader(io.StringIO(a["results.csv"].decode())))
    assert [int(r["replica"]) for r in rows] == list(range(cfg.replicas))
    assert all(int(r["seed"]) == s for r, s in zip(rows, man["replica_seeds"]))


@pytest.mark.parametrize("exp", ["simulate", "shape", "flat-edge", "ct", "srw-validate"])
def test_single_replica_reproduces_row(tmp_path, exp):
    cfg = small_config(exp)
    run_experiment(cfg, tmp_path)
    lines = (tmp_path / "results.csv").read_text().splitlines()
    for r in (0, cfg.replicas - 1):
        alone = harness.results_csv([harness.replica_rows(cfg, r)]).splitlines()
        assert alone[0] == lines[0] and alone[1] == lines[1 + r]


def test_parallel_output_identical(tmp_path):
    cfg = small_config("simulate", replicas=6)
    run_experiment(cfg, tmp_path / "serial")
    cfg.workers = 2
    run_experiment(cfg, tmp_path / "parallel")
    assert read_bytes(tmp_path / "serial") == read_bytes(tmp_path / "parallel")


def test_shape_svg_written_for_d2(tmp_path):
    run_experiment(small_config("shape"), tmp_path)
    svg = (tmp_path / "shape.svg").read_text()
    assert svg.startswith("<svg") and 'id="hull"' in svg and 'id="diamond"' in svg


def test_failure_removes_partial_outputs(tmp_path, monkeypatch):
    def boom(cfg, rows):
        raise RuntimeError("summary failed")

    monkeypatch.setattr(harness, "_summary", boom)
    out = tmp_path / "fresh"
    with pytest.raises(RuntimeError):
        run_experiment(small_config("simulate"), out)
    assert not out.exists()
    existing = tmp_path / "existing"
    existing.mkdir()
    (existing / "keep.txt").write_text("x")
    monkeypatch.setattr(harness, "results_csv", lambda rows: (_ for _ in ()).throw(OSError("disk")))
    with pytest.raises(OSError):
        run_experiment(small_config("simulate"), existing)
    assert sorted(p.name for p in existing.iterdir()) == ["keep.txt"]


# -- CLI -----------------------------------------------------------------------


def write_config(tmp_path, exp, **kw):
    p = tmp_path / f"{exp}.json"
    p.write_text(small_config(exp, **kw).emit())
    return p


def test_cli_success(tmp_path, capsys):
    cfg = write_config(tmp_path, "simulate")
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", str(cfg), "--seed", "5", "--replicas", "2", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["seed"] == 5 and man["config"]["replicas"] == 2


def test_cli_validation_errors(tmp_path, capsys):
    cfg = write_config(tmp_path, "simulate")
    assert cli.main(["simulate", "--config", str(cfg), "--replicas", "0", "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["mu", "--config", str(cfg)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"experiment": "simulate", "n": 5, "colour": "red"}')
    assert cli.main(["simulate", "--config", str(bad)]) == 2
    bad.write_text("{oops")
    assert cli.main(["simulate", "--config", str(bad)]) == 2
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["teleport"])
    assert e.value.code == 2
    assert not (tmp_path / "o").exists()


def test_cli_runtime_failure(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(harness, "_summary", lambda cfg, rows: 1 / 0)
    monkeypatch.setattr(cli, "run_experiment", harness.run_experiment)
    out = tmp_path / "o"
    cfg = write_config(tmp_path, "simulate")
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 1
    assert not out.exists()
    assert "run failed" in capsys.readouterr().err


def test_cli_print_config(capsys):
    assert cli.main(["ct", "--print-config", "--seed", "3"]) == 0
    cfg = ExperimentConfig.parse(capsys.readouterr().out)
    assert cfg.experiment == "ct" and cfg.seed == 3


def test_console_script_installed(tmp_path):
    exe = shutil.which("frogsim")
    assert exe is not None
    res = subprocess.run([exe, "simulate", "--replicas", "1", "--out", str(tmp_path / "o")],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "o" / "manifest.json").exists()
    res = subprocess.run([exe, "simulate", "--replicas", "0"], capture_output=True, text=True)
    assert res.returncode == 2
