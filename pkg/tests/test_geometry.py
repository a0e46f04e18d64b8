import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from capssc import geometry as geo
from capssc.geometry import CurveError, PlanarCurve, PreconditionError

SQUARE2 = PlanarCurve([[-1, -1], [1, -1], [1, 1], [-1, 1]])
UNIT_SQUARE = PlanarCurve([[0, 0], [1, 0], [1, 1], [0, 1]])


def circle(n, radius=2.0, center=(0.0, 0.0)):
    return geo.regular_polygon(n, radius, center)


def test_length_and_area_of_simple_shapes():
    assert geo.curve_length(UNIT_SQUARE) == 4.0
    assert geo.enclosed_area(UNIT_SQUARE) == 1.0
    assert geo.enclosed_area(PlanarCurve([[0, 0], [1, 0], [0, 1]])) == 0.5
    c = circle(4096)
    assert geo.curve_length(c) == pytest.approx(4 * math.pi, rel=1e-5)
    assert geo.enclosed_area(c) == pytest.approx(4 * math.pi, rel=1e-5)


@pytest.mark.parametrize("verts", [
    [[0, 0], [1, 1]],
    [[0, 0], [1, 0], [1, 1], [0, 1]][::-1],  # clockwise
    [[0, 0], [1, 1], [1, 0], [0, 1]],  # bow tie
    [[0, 0], [1, 0], [1, 0], [0, 1]],
    [[0, 0], [np.nan, 0], [0, 1]],
])
def test_invalid_vertex_loops_are_rejected(verts):
    with pytest.raises(CurveError):
        PlanarCurve(verts)


def test_from_points_accepts_clockwise_input():
    c = PlanarCurve.from_points([[0, 0], [0, 1], [1, 1], [1, 0]])
    assert geo.enclosed_area(c) == 1.0


def test_circumradius_examples():
    r, c = geo.circumradius(SQUARE2)
    assert r == pytest.approx(math.sqrt(2), abs=1e-12) and np.abs(c).max() < 1e-12
    r, c = geo.circumradius(circle(4096))
    assert abs(r - 2) < 1e-9 and np.abs(c).max() < 1e-9
    r, c = geo.circumradius(circle(4096, 1.0, (3.0, 0.0)))
    assert abs(r - 1) < 1e-9 and np.abs(c - [3, 0]).max() < 1e-9


def hull_curve(pts):
    return PlanarCurve(pts[ConvexHull(pts).vertices])


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(3, 25))
def test_circumradius_matches_brute_force(seed, n):
    pts = np.random.default_rng(seed).normal(size=(n, 2))
    r, c = geo.circumradius(hull_curve(pts))
    assert np.hypot(*(pts - c).T).max() <= r * (1 + 1e-12)
    best = math.inf
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j, n):
                cc, _ = geo._circle_three(pts[i], pts[j], pts[k]) if k > j else geo._circle_two(pts[i], pts[j])
                best = min(best, np.hypot(*(pts - cc).T).max())
    assert r == pytest.approx(best, rel=1e-9)


def test_inradius_examples():
    r, c = geo.inradius(SQUARE2)
    assert r == pytest.approx(1.0, abs=1e-9) and np.abs(c).max() < 1e-9
    n = 4096
    r, _ = geo.inradius(circle(n))
    assert abs(r - 2 * math.cos(math.pi / n)) < 1e-4


def star(points=5, outer=1.0, inner=0.3):
    th = math.pi * np.arange(2 * points) / points
    rad = np.where(np.arange(2 * points) % 2 == 0, outer, inner)
    return PlanarCurve(np.stack([rad * np.cos(th), rad * np.sin(th)], 1))


def test_inradius_of_nonconvex_star_against_lattice():
    s = star()
    r, c = geo.inradius(s)
    R, _ = geo.circumradius(s)
    assert r < R
    xs = np.arange(-0.35, 0.35, 1e-3)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    lat = np.stack([X.ravel(), Y.ravel()], 1)
    lat = lat[s.contains(lat)]
    brute = s.boundary_distance(lat).max()
    assert brute - 1e-3 <= r <= brute + 1e-3
    assert s.contains(c[None, :])[0]


def test_inradius_needs_an_interior_sample():
    sliver = PlanarCurve([[0, 0], [1, 0], [1, 1e-6], [0.5, 0.5e-6 + 1e-9], [0, 1e-6]])
    with pytest.raises(CurveError):
        geo.inradius(sliver, pitch=0.1)


def test_bonnesen_square_and_circle():
    m = geo.bonnesen_check(SQUARE2)
    assert m.deficit == pytest.approx(64 - 16 * math.pi)
    assert m.bonnesen_rhs == pytest.approx(math.pi**2 * (math.sqrt(2) - 1))
    assert m.holds
    m = geo.bonnesen_check(circle(4096))
    assert abs(m.deficit) < 1e-3 and m.bonnesen_rhs < 1e-4 and m.holds


def test_linear_bound_fails_for_small_copies_but_squared_form_is_scale_free():
    small = PlanarCurve(SQUARE2.vertices * 0.05)
    m = geo.bonnesen_check(small, tol=0.0)
    assert not m.holds
    assert m.squared_margin > 0
    big = geo.bonnesen_check(SQUARE2)
    assert m.squared_margin / big.squared_margin == pytest.approx(0.05**2)


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_squared_bonnesen_holds_on_random_convex_polygons(seed):
    m = geo.bonnesen_check(geo.random_convex_polygon(np.random.default_rng(seed)))
    assert m.squared_margin >= -1e-9
    assert m.inradius <= m.circumradius


def test_annulus_examples():
    d = 0.1
    assert geo.annulus_certify(circle(4096), d).contained
    out = circle(4096, 2 + 9 * d / math.pi + 0.01)
    assert not geo.annulus_certify(out, d).contained
    with pytest.raises(PreconditionError):
        geo.annulus_certify(circle(64), 2 * math.pi / 27)


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 0.2))
def test_perturbed_circles_meet_the_confinement_bounds(seed, delta):
    c = geo.symmetric_perturbed_circle(np.random.default_rng(seed), delta, 2048)
    assert geo.enclosed_area(c) == pytest.approx(4 * math.pi, rel=1e-12)
    assert geo.curve_length(c) <= 4 * math.pi + delta
    cert = geo.annulus_certify(c, delta)
    assert cert.radius_gap < cert.squared_gap_bound
    _, center = geo.circumradius(c)
    assert np.abs(center).max() < 1e-8
    assert geo.reflective_symmetry_defect(c) < 1e-9


def test_linear_gap_bound_fails_near_the_circle():
    # R - rho shrinks like sqrt(delta), so 9 delta / pi is too small for small delta
    c = geo.symmetric_perturbed_circle(np.random.default_rng(3), 2e-3, 2048)
    cert = geo.annulus_certify(c, 2e-3)
    assert cert.radius_gap > cert.gap_bound + 1e-4
    assert cert.radius_gap < cert.squared_gap_bound


def test_perturbed_circle_needs_enough_vertices():
    with pytest.raises(PreconditionError):
        geo.symmetric_perturbed_circle(np.random.default_rng(0), 1e-3, 64)


def test_reflective_symmetry_defect_examples():
    assert geo.reflective_symmetry_defect(circle(512)) < 1e-12
    assert geo.reflective_symmetry_defect(circle(512, 1.0, (0.5, 0.0))) == pytest.approx(1.0, abs=1e-3)
    th = 2 * math.pi * np.arange(400) / 400
    ellipse = PlanarCurve(np.stack([3 * np.cos(th), np.sin(th)], 1))
    assert geo.reflective_symmetry_defect(ellipse) < 1e-12


def test_curve_csv_round_trip(tmp_path):
    c = geo.random_convex_polygon(np.random.default_rng(5))
    geo.write_curve_csv(c, tmp_path / "c.csv")
    back = geo.read_curve_csv(tmp_path / "c.csv")
    assert np.array_equal(back.vertices, c.vertices)
