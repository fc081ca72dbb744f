import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from frogsim.lattice import (
    Box,
    DiamondRegion,
    diamond_array,
    diamond_size,
    diamond_sites,
    is_nn_connected,
    l1_norm,
    l2_norm,
    neighbors,
    sites_from_csv,
    sites_to_csv,
    step_vectors,
)

points = st.integers(1, 4).flatmap(lambda d: st.lists(st.integers(-10**6, 10**6), min_size=d, max_size=d))


@pytest.mark.parametrize("x, expected", [((0, 0), 0), ((1, -2), 3), ((-3, 0, 4), 7)])
def test_l1_norm_examples(x, expected):
    assert l1_norm(x) == expected


@pytest.mark.parametrize("x, expected", [((0, 0), 0.0), ((3, 4), 5.0), ((1, 1, 1), math.sqrt(3))])
def test_l2_norm_examples(x, expected):
    assert l2_norm(x) == pytest.approx(expected, rel=1e-15)


def test_neighbors_examples():
    assert neighbors((0,)) == [(1,), (-1,)]
    assert neighbors((0, 0)) == [(1, 0), (-1, 0), (0, 1), (0, -1)]


def test_step_vectors_order():
    assert step_vectors(3).tolist() == [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]


@given(points)
def test_neighbors_distinct_unit_distance(x):
    nb = neighbors(x)
    assert len(nb) == 2 * len(x)
    assert len(set(nb)) == len(nb)
    assert all(l1_norm(np.subtract(n, x)) == 1 for n in nb)


@given(points)
def test_norm_equivalence(x):
    d = len(x)
    assert l2_norm(x) <= l1_norm(x) + 1e-9
    assert l1_norm(x) <= math.sqrt(d) * l2_norm(x) * (1 + 1e-12) + 1e-9


def test_diamond_examples():
    assert len(list(diamond_sites(DiamondRegion(1, (0, 0))))) == 5
    assert list(diamond_sites(DiamondRegion(2, (0,)))) == [(-2,), (-1,), (0,), (1,), (2,)]
    brute = [(a, b) for a in range(-2, 3) for b in range(-2, 3) if abs(a) + abs(b) <= 2]
    assert sorted(diamond_sites(DiamondRegion(2, (0, 0)))) == sorted(brute)
    assert len(brute) == 13


@pytest.mark.parametrize("n", range(0, 51))
def test_diamond_size_d2_formula(n):
    assert diamond_size(2, n) == 2 * n * n + 2 * n + 1
    assert len(diamond_array(2, n)) == 2 * n * n + 2 * n + 1


@pytest.mark.parametrize("d, r", [(1, 5), (3, 4), (4, 3)])
def test_diamond_enumeration_matches_size(d, r):
    sites = list(diamond_sites(DiamondRegion(r, (0,) * d)))
    assert len(sites) == len(set(sites)) == diamond_size(d, r)
    assert np.array_equal(np.array(sites), diamond_array(d, r))


def test_diamond_center_and_membership():
    reg = DiamondRegion(2, (5, -1))
    sites = list(diamond_sites(reg))
    assert all(s in reg for s in sites)
    assert (8, -1) not in reg
    with pytest.raises(ValueError):
        DiamondRegion(-1, (0,))


@given(st.integers(1, 3), st.integers(0, 6), st.data())
def test_box_flat_roundtrip(d, W, data):
    center = data.draw(st.lists(st.integers(-5, 5), min_size=d, max_size=d))
    box = Box(d, W, center)
    pts = data.draw(st.lists(st.lists(st.integers(-W, W), min_size=d, max_size=d), min_size=1, max_size=20))
    coords = np.array(pts) + np.array(center)
    assert np.array_equal(box.coords(box.flat(coords)), coords)
    # offsets are the flat increments of the unit steps
    mid = box.flat(np.array(center))
    for r, s in enumerate(step_vectors(d)):
        if W >= 1:
            assert box.flat(np.array(center) + s) == mid + box.offsets[r]


def test_box_rejects_outside():
    with pytest.raises(IndexError):
        Box(2, 1).flat([[2, 0]])


def test_connectivity():
    assert is_nn_connected(np.array([[0, 0], [1, 0], [1, 1]]))
    assert not is_nn_connected(np.array([[0, 0], [1, 1]]))  # diagonal only
    assert is_nn_connected(np.zeros((1, 3), dtype=np.int64))


def test_csv_roundtrip():
    s = np.array([[1, -2], [0, 3]])
    assert np.array_equal(sites_from_csv(sites_to_csv(s)), s)
