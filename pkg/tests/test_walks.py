import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from frogsim import walks
from frogsim.lattice import l1_norm
from frogsim.walks import WalkStore

origins = st.integers(1, 3).flatmap(lambda d: st.lists(st.integers(-50, 50), min_size=d, max_size=d))


def test_step_at_deterministic():
    a, b = WalkStore(3, 2), WalkStore(3, 2)
    assert a.step_at((1, 2), 5) == a.step_at((1, 2), 5) == b.step_at((1, 2), 5)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_step_uniformity(d):
    store = WalkStore(11, d)
    dirs = store.directions((0,) * d, 1, 10**6)
    counts = np.bincount(dirs, minlength=2 * d)
    p = 1 / (2 * d)
    sigma = np.sqrt(10**6 * p * (1 - p))
    assert np.all(np.abs(counts - 10**6 * p) <= 3 * sigma)


def test_origins_independent():
    store = WalkStore(5, 2)
    k = 7
    a = np.array([store.directions((x, 0), k, k)[0] for x in range(20_000)])
    b = np.array([store.directions((x, 1), k, k)[0] for x in range(20_000)])
    table = np.zeros((4, 4))
    np.add.at(table, (a, b), 1)
    assert stats.chi2_contingency(table).pvalue > 0.01


def test_position_examples():
    store = WalkStore(0, 1)
    assert store.position((4,), 0) == (4,)
    assert store.position((4,), 1) in [(5,), (3,)]


@given(st.integers(0, 2**63), origins, st.integers(0, 300))
def test_position_within_l1_and_parity(seed, origin, k):
    store = WalkStore(seed, len(origin))
    pos = store.position(origin, k)
    delta = np.subtract(pos, origin)
    assert l1_norm(delta) <= k
    assert int(delta.sum()) % 2 == k % 2


@given(st.integers(0, 2**63), origins, st.integers(0, 100))
def test_stores_with_equal_seed_agree(seed, origin, k):
    a = WalkStore(seed, len(origin)).trajectory(origin, k).positions
    b = WalkStore(seed, len(origin), cache=False).trajectory(origin, k).positions
    assert np.array_equal(a, b)


@given(st.integers(0, 2**32), st.integers(1, 60), st.integers(1, 60))
def test_coupling_isolation(seed, k1, k2):
    store = WalkStore(seed, 2)
    ref = WalkStore(seed, 2).trajectory((0, 0), 80).positions
    store.trajectory((3, 3), k1)
    store.position((0, 0), k2)
    store.trajectory((-1, 2), k1 + k2)
    assert np.array_equal(store.trajectory((0, 0), 80).positions, ref)


def test_out_of_order_realization():
    a = WalkStore(9, 2)
    late = a.position((1, 1), 50)
    b = WalkStore(9, 2)
    b.position((1, 1), 10)
    b.clear()
    assert b.position((1, 1), 50) == late


def test_hitting_time_examples():
    store = WalkStore(1, 2)
    assert store.hitting_time((2, 2), (2, 2), 10) == 0
    keys = walks.replica_walk_keys(1, 0, 20_000)
    t = walks.hitting_times(1, 1, (1,), keys)
    p = np.mean(t == 1)
    assert abs(p - 0.5) <= 3 * np.sqrt(0.25 / 20_000)


def test_hitting_time_nothit_d3():
    keys = walks.replica_walk_keys(3, 2, 5000)
    t = walks.hitting_times(3, 12, (6, 0, 0), keys)
    assert np.mean(t < 0) > 0
    store = WalkStore(2, 3)
    assert store.hitting_time((0, 0, 0), (30, 0, 0), 10) is None


def test_hitting_time_matches_kernel():
    keys = walks.replica_walk_keys(2, 4, 200)
    t = walks.hitting_times(2, 40, (1, 1), keys)
    from frogsim._hashing import replica_seed

    for r in range(200):
        st_ = WalkStore(replica_seed(4, r), 2)
        h = st_.hitting_time((0, 0), (1, 1), 40)
        assert (h if h is not None else -1) == t[r]


@given(st.integers(0, 2**32), st.integers(0, 200))
def test_sup_displacement(seed, n):
    store = WalkStore(seed, 2)
    assert store.sup_displacement((0, 0), 0) == 0
    assert store.sup_displacement((0, 0), 1) == 1
    assert store.sup_displacement((0, 0), n) <= store.sup_displacement((0, 0), n + 1)


def test_vectorized_kernels_match_store():
    from frogsim._hashing import replica_seed

    keys = walks.replica_walk_keys(2, 8, 50)
    ends = walks.endpoints(2, 30, keys)
    sup = walks.sup_sq_displacements(2, 30, keys)
    rng = walks.ranges(2, 30, keys)
    for r in range(50):
        path = WalkStore(replica_seed(8, r), 2).trajectory((0, 0), 30).positions
        assert tuple(ends[r]) == tuple(path[-1])
        assert sup[r] == (path**2).sum(axis=1).max()
        assert rng[r] == len({tuple(p) for p in path.tolist()})


def test_invalid_arguments():
    store = WalkStore(0, 2)
    with pytest.raises(ValueError):
        store.step_at((0, 0), 0)
    with pytest.raises(ValueError):
        store.position((0, 0), -1)
    with pytest.raises(ValueError):
        store.position((0, 0, 0), 1)
