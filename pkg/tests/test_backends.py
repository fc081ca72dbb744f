"""The numba kernels and the numpy fallback must agree.

Coupled and continuous-time dynamics are deterministic functions of the seed
and must match exactly (CT times to floating-point reassociation). The
aggregated engine draws from the generator differently in each backend, so
there the two are compared in law.
"""

import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from frogsim import engine, kernels, walks
from frogsim._hashing import replica_seed
from frogsim.engine import EngineMode, InitialConfig

pytestmark = pytest.mark.skipif(kernels.numba_impl is None, reason="numba backend disabled")

CONFIGS = [InitialConfig.one_per_site(), InitialConfig.m_per_site(3), InitialConfig.heavy_tail(1.2, 4)]


@pytest.fixture
def use_numpy(monkeypatch):
    def activate():
        for name in ("advance_coupled", "aggregated_step", "ct_solve", "walk_endpoints",
                     "walk_hitting_times", "walk_sup_sq", "walk_ranges"):
            monkeypatch.setattr(kernels, name, getattr(kernels.numpy_impl, name))
    return activate


def _coupled(d, cfg, seed, n):
    s = engine.init(d, cfg, seed, horizon=n)
    engine.run(s, n)
    return s.awake.copy(), s.active_total(), s.cap_events


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: c.variant)
@pytest.mark.parametrize("d, n", [(1, 60), (2, 25), (3, 8)])
def test_coupled_bitwise(use_numpy, cfg, d, n):
    fast = [_coupled(d, cfg, replica_seed(1, r), n) for r in range(4)]
    use_numpy()
    slow = [_coupled(d, cfg, replica_seed(1, r), n) for r in range(4)]
    for (a1, t1, c1), (a2, t2, c2) in zip(fast, slow):
        assert np.array_equal(a1, a2) and t1 == t2 and c1 == c2


def test_coupled_targets_stop_identically(use_numpy):
    targets = [(3, 1), (-2, 0)]
    fast = [engine.passage_times(2, None, s, targets, 40) for s in range(10)]
    use_numpy()
    slow = [engine.passage_times(2, None, s, targets, 40) for s in range(10)]
    assert np.array_equal(fast, slow)


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: c.variant)
def test_ct_agree(use_numpy, cfg):
    # the numpy solver walks particle by particle; keep heavy-tailed runs short
    t_end = 2.0 if cfg.variant == "heavy" else 6.0
    fast = [engine.ct_run(2, cfg, s, t_end) for s in range(3)]
    use_numpy()
    slow = [engine.ct_run(2, cfg, s, t_end) for s in range(3)]
    for a, b in zip(fast, slow):
        assert np.array_equal(a.order, b.order)
        assert np.allclose(a.times(), b.times(), rtol=1e-12, atol=1e-12)
        assert np.array_equal(a.hops, b.hops)
        assert len(a.p_pos) == len(b.p_pos)


def test_walk_kernels_agree(use_numpy):
    keys = walks.replica_walk_keys(3, 5, 300)
    fast = (walks.endpoints(3, 50, keys), walks.hitting_times(3, 50, (1, 1, 0), keys),
            walks.sup_sq_displacements(3, 50, keys), walks.ranges(3, 50, keys))
    use_numpy()
    slow = (walks.endpoints(3, 50, keys), walks.hitting_times(3, 50, (1, 1, 0), keys),
            walks.sup_sq_displacements(3, 50, keys), walks.ranges(3, 50, keys))
    for a, b in zip(fast, slow):
        assert np.array_equal(a, b)


def test_aggregated_agree_in_law(use_numpy):
    cfg = InitialConfig.m_per_site(2)

    def sizes():
        out = []
        for r in range(1500):
            s = engine.init(2, cfg, replica_seed(9, r), EngineMode.AGGREGATED, horizon=6)
            out.append(engine.run(s, 6).xi_size())
        return np.array(out)

    fast = sizes()
    use_numpy()
    slow = sizes()
    assert stats.mannwhitneyu(fast, slow).pvalue > 0.001
    assert abs(fast.mean() - slow.mean()) < 4 * np.sqrt((fast.var() + slow.var()) / 1500)


def _digest():
    h = hashlib.sha256()
    for s in range(3):
        h.update(_coupled(2, InitialConfig.m_per_site(2), s, 20)[0].tobytes())
    return h.hexdigest()


FALLBACK_SCRIPT = """
import hashlib, json
from frogsim import BACKEND, engine, kernels
from frogsim.engine import InitialConfig
h = hashlib.sha256()
for s in range(3):
    st = engine.init(2, InitialConfig.m_per_site(2), s, horizon=20)
    engine.run(st, 20)
    h.update(st.awake.tobytes())
print(json.dumps({"backend": BACKEND, "numba_impl": kernels.numba_impl is not None, "digest": h.hexdigest()}))
"""


def test_env_flag_selects_numpy_fallback():
    env = dict(os.environ, FROGSIM_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", FALLBACK_SCRIPT], env=env, capture_output=True,
                         text=True, check=True)
    res = json.loads(out.stdout.strip().splitlines()[-1])
    assert res["backend"] == "numpy" and not res["numba_impl"]
    assert res["digest"] == _digest()
