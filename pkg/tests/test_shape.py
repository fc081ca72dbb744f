import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from frogsim import engine, shape
from frogsim.hull import cell_hull_doubled, contains_points, convex_hull, is_convex_ccw, polygon_area
from frogsim.percolation import oriented_percolation, theta, triangle
from frogsim.shape import ShapeSnapshot

seeds = st.integers(0, 2**63)
site_sets = st.lists(st.tuples(st.integers(-30, 30), st.integers(-30, 30)), min_size=1, max_size=60)


def _snap(seed, n, d=2):
    s = engine.run(engine.init(d, None, seed, horizon=n), n)
    return shape.snapshot(s)


# -- hulls -------------------------------------------------------------------


def test_convex_hull_square_with_interior_and_collinear():
    pts = [(0, 0), (2, 0), (2, 2), (0, 2), (1, 1), (1, 0)]
    assert convex_hull(pts).tolist() == [[0, 0], [2, 0], [2, 2], [0, 2]]


@given(site_sets)
def test_hull_convex_and_contains_points(pts):
    h = cell_hull_doubled(np.array(pts))
    assert is_convex_ccw(h)
    assert polygon_area(h) > 0
    assert contains_points(h, 2 * np.array(pts)).all()
    corners = (2 * np.array(pts)[:, None, :] + np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]])).reshape(-1, 2)
    assert contains_points(h, corners).all()


# -- snapshots ---------------------------------------------------------------


def test_snapshot_n0_single_cell():
    s = shape.snapshot(engine.init(2, None, 0, horizon=3))
    assert s.n == 0 and s.xi.tolist() == [[0, 0]]
    assert sorted(map(tuple, s.hull().tolist())) == [(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)]
    assert 0 <= shape.smallball_fit(s) <= 1


@given(seeds, st.integers(1, 40))
def test_snapshot_hull_properties(seed, n):
    s = _snap(seed, n)
    h = s.hull_doubled()
    assert is_convex_ccw(h) or len(h) < 3
    area = polygon_area(h) / 4 / n**2
    assert area >= len(s.xi) / n**2 - 1e-12
    assert shape.hull_contains_sites(s)
    assert shape.hull_within_padded_diamond(s)
    assert 0 <= shape.smallball_fit(s) <= 1


def test_snapshot_of_past_time():
    st_ = engine.run(engine.init(2, None, 2, horizon=20), 20)
    past = shape.snapshot(st_, 10)
    fresh = _snap(2, 10)
    assert np.array_equal(past.xi, fresh.xi)
    with pytest.raises(ValueError):
        shape.snapshot(engine.init(2, None, 2, horizon=5), 3)


def test_padded_diamond_exact_boundary():
    n = 10
    d = shape.diamond_snapshot(2, n)
    assert shape.hull_within_padded_diamond(d)
    # cells of D_{n+1} touch the padded boundary exactly; D_{n+2} crosses it
    assert shape.hull_within_padded_diamond(ShapeSnapshot(n, shape.diamond_array(2, n + 1)))
    assert not shape.hull_within_padded_diamond(ShapeSnapshot(n, shape.diamond_array(2, n + 2)))


def test_padded_diamond_d3_support():
    s = _snap(3, 8, d=3)
    assert shape.hull_within_padded_diamond(s)


# -- sandwich and symmetry ---------------------------------------------------


def test_sandwich_examples():
    s = _snap(1, 30)
    assert shape.sandwich_check(s, s, 0.0)
    s2 = _snap(1, 60)
    assert not shape.sandwich_check(s, s2, 0.0)
    with pytest.raises(ValueError):
        shape.sandwich_check(s, s2, 1.0)


@given(seeds, st.floats(0, 0.99), st.floats(0, 0.99))
def test_sandwich_monotone_in_eps(seed, e1, e2):
    lo, hi = sorted((e1, e2))
    st_ = engine.run(engine.init(2, None, seed, horizon=24), 24)
    a, b = shape.snapshot(st_, 12), shape.snapshot(st_, 24)
    if shape.sandwich_check(a, b, lo):
        assert shape.sandwich_check(a, b, hi)
    assert shape.sandwich_check(a, b, lo) == (shape.sandwich_margin(a, b) <= lo)


def test_symmetry_examples():
    d = shape.diamond_snapshot(2, 15)
    assert shape.symmetry_defect(d) == pytest.approx(0.0, abs=1e-12)
    assert shape.symmetry_defect(d, "sup") == pytest.approx(0.0, abs=1e-12)
    assert shape.symmetry_check(d, 0.0)
    s = _snap(4, 40)
    u = shape.direction_set(2)
    for g in shape.signed_permutations(2):
        m = s.mirrored(g)
        assert np.allclose(m.mirrored(g.T).support(u), s.support(u))
    with pytest.raises(ValueError):
        shape.symmetry_defect(s, "bogus")
    with pytest.raises(ValueError):
        shape.symmetry_check(_snap(0, 4, d=3), 0.1)


def test_direction_sets():
    u2 = shape.direction_set(2)
    assert len(u2) == 64 and np.allclose(np.linalg.norm(u2, axis=1), 1)
    u3 = shape.direction_set(3)
    assert len(u3) == 6 + 8
    assert len(shape.signed_permutations(2)) == 8
    assert len(shape.signed_permutations(3)) == 48


def test_support_of_cell_union_exact():
    s = ShapeSnapshot(1, np.array([[0, 0]]))
    assert np.allclose(s.support(np.array([[1.0, 0.0], [1 / math.sqrt(2), 1 / math.sqrt(2)]])),
                       [0.5, 1 / math.sqrt(2)])


def test_inner_radius():
    assert shape.inner_radius(shape.diamond_snapshot(2, 7)) == 7
    holes = shape.diamond_array(2, 7)
    holes = holes[~np.all(holes == [3, -2], axis=1)]
    assert shape.inner_radius(ShapeSnapshot(7, holes)) == 4


def test_snapshot_csv():
    s = ShapeSnapshot(2, np.array([[0, 0], [1, 0]]))
    assert s.to_csv() == "0,0\n1,0\n"


# -- percolation -------------------------------------------------------------


def test_theta_values():
    assert theta(2, 2) == pytest.approx(0.25)
    assert theta(2, 16) == pytest.approx(0.899887, abs=1e-6)
    vals = [theta(2, m) for m in range(2, 200, 2)]
    assert np.all(np.diff(vals) > 0)
    assert theta(2, 400) > 1 - 1e-20 or theta(2, 400) == 1.0
    for bad in (0, 1, 3):
        with pytest.raises(ValueError):
            theta(2, bad)


@given(st.integers(0, 30), seeds)
def test_percolation_extremes(n, seed):
    full = oriented_percolation(1.0, n, seed)
    assert full.cluster_size() == (n + 1) * (n + 2) // 2
    assert np.array_equal(np.sort(full.cluster_sites(), axis=0), np.sort(triangle(n), axis=0))
    empty = oriented_percolation(0.0, n, seed)
    assert empty.cluster_sites().tolist() == [[0, 0]]


@given(st.floats(0, 1), st.integers(1, 25), seeds)
def test_percolation_cluster_oriented_paths(th, n, seed):
    p = oriented_percolation(th, n, seed)
    for x1, x2 in p.cluster_sites().tolist():
        if (x1, x2) == (0, 0):
            continue
        left = x1 > 0 and p.cluster[x1 - 1, x2] and p.right[x1 - 1, x2]
        below = x2 > 0 and p.cluster[x1, x2 - 1] and p.up[x1, x2 - 1]
        assert left or below


def test_percolation_bond_density():
    p = oriented_percolation(0.3, 150, 1)
    sites = triangle(150)
    frac = p.right[sites[:, 0], sites[:, 1]].mean()
    assert abs(frac - 0.3) < 0.01


# -- svg ---------------------------------------------------------------------


def test_svg_examples():
    from frogsim.svg import cell_rects, render_shape_svg, svg_points, to_rescaled

    s0 = shape.snapshot(engine.init(2, None, 0, horizon=1))
    doc = render_shape_svg(s0)
    assert doc.count("<rect") == 2  # background + one cell
    assert cell_rects(s0) == [(-0.5, -0.5, 0.5, 0.5)]
    dia = [to_rescaled(*p) for p in svg_points(doc, "diamond")]
    assert sorted(dia) == sorted([(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)])
    with pytest.raises(ValueError):
        render_shape_svg(_snap(0, 3, d=3))


@given(seeds, st.integers(1, 30))
def test_svg_hull_vertices_are_rendered_corners(seed, n):
    import xml.etree.ElementTree as ET

    from frogsim.svg import render_shape_svg, svg_points

    s = _snap(seed, n)
    doc = render_shape_svg(s)
    assert doc == render_shape_svg(s)
    corners = set()
    for el in ET.fromstring(doc).iter():
        if el.tag.endswith("rect") and el.get("fill") is None:
            x, y = float(el.get("x")), float(el.get("y"))
            w, h = float(el.get("width")), float(el.get("height"))
            for cx in (x, x + w):
                for cy in (y, y + h):
                    corners.add((cx, cy))
    c = np.array(sorted(corners))
    for p in svg_points(doc, "hull"):
        # coordinates are printed to 4 decimals, widths rounded separately
        assert np.abs(c - np.array(p)).max(axis=1).min() <= 2e-4
