import numpy as np
import pytest

from frogsim import estimators
from frogsim.estimators import MuEstimate, estimate_mu, mu_norm_checks, passage_tail_diag, tail_curve


@pytest.fixture(scope="module")
def mu_d2():
    grid = [8, 16, 24, 32]
    return {
        "x": estimate_mu(2, (1, 0), grid, 120, base_seed=1, bootstrap=300),
        # same distances as the e1 grid, so finite-size drift of the slope cancels
        "2x": estimate_mu(2, (2, 0), [n // 2 for n in grid], 120, base_seed=2, bootstrap=300),
        "y": estimate_mu(2, (0, 1), grid, 120, base_seed=3, bootstrap=300),
        "xy": estimate_mu(2, (1, 1), grid, 120, base_seed=4, bootstrap=300),
        "-x": estimate_mu(2, (-1, 0), grid, 120, base_seed=5, bootstrap=300),
    }


def test_mu_rejects_bad_input():
    with pytest.raises(ValueError):
        estimate_mu(2, (0, 0), [10, 20], 5)
    with pytest.raises(ValueError):
        estimate_mu(2, (1, 0), [20, 10], 5)


def test_mu_lower_bound_and_ci(mu_d2):
    for est in mu_d2.values():
        assert est.ci[0] <= est.slope <= est.ci[1]
        assert est.slope + est.half_width >= sum(abs(c) for c in est.direction)
        assert not est.unreliable


def test_mu_norm_checks(mu_d2):
    checks = mu_norm_checks(mu_d2["x"], mu_d2["2x"], mu_d2["y"], mu_d2["xy"], mu_d2["-x"])
    assert checks == {"homogeneity": True, "triangle": True, "symmetry": True, "lower_bound": True}


def test_mu_censoring_policy():
    est = estimate_mu(2, (1, 0), [10, 20], 30, horizon_factor=1.0, bootstrap=50)
    assert est.censored_fraction > estimators.CENSOR_LIMIT and est.unreliable
    assert np.isnan(est.slope) and np.isnan(est.ci[0])
    part = estimate_mu(2, (1, 0), [4, 8], 60, horizon_factor=1.6, bootstrap=50)
    assert 0 < part.censored_fraction < 1 and np.isfinite(part.slope)
    d = est.to_dict()
    assert d["unreliable"] and d["replicas"] == 30


def test_mu_samples_reuse_matches_fresh():
    grid = [5, 10, 15]
    S = estimators.passage_samples(1, np.array([[n] for n in grid]), 40, 45, base_seed=7)
    a = estimate_mu(1, (1,), grid, 40, base_seed=7, bootstrap=100)
    b = estimate_mu(1, (1,), grid, 40, base_seed=7, bootstrap=100, samples=S)
    assert a == b


def test_bootstrap_ci_brackets_slope():
    n = np.array([10, 20, 30])
    rng = np.random.default_rng(0)
    samples = 2.0 * n + rng.normal(0, 3, size=(200, 3))
    lo, hi = estimators.bootstrap_slope_ci(n, samples, 500)
    assert lo < 2.0 < hi


def test_tail_curve_counts_censored_as_large():
    s = np.array([3, 5, -1, 7])
    assert tail_curve(s, [3, 6, 100]).tolist() == [1.0, 0.5, 0.25]


def test_passage_tail_examples():
    with pytest.raises(ValueError):
        passage_tail_diag(2, (3, 0), [5, 10], 100)
    S = estimators.passage_samples(2, np.array([[3, 0]]), 2000, 60, base_seed=3)[:, 0]
    diag = passage_tail_diag(2, (3, 0), [3, 5, 8, 11, 14, 17, 20], 2000, samples=S, bootstrap=100)
    assert diag.tail[0] <= 1
    assert np.all(np.diff(diag.tail) <= 0)
    assert diag.gamma is not None and diag.gamma > 0
    assert diag.gamma_ci[0] <= diag.gamma <= diag.gamma_ci[1]


def test_mu_estimate_dict_roundtrip_fields():
    m = MuEstimate((1, 0), (10, 20), 1.5, (1.4, 1.6), 10, 0.0, (15.0, 30.0))
    assert m.half_width == pytest.approx(0.1)
    assert m.to_dict()["ci"] == [1.4, 1.6]
