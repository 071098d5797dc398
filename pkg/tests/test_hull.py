import numpy as np
import pytest

from lambdaci.hull import (
    DegenerateHullError,
    convex_hull_2d,
    point_in_polygon,
    polygon_area,
)


def test_square_with_interior_point():
    pts = [(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)]
    hull = convex_hull_2d(pts)
    assert {tuple(p) for p in hull} == {(0, 0), (1, 0), (1, 1), (0, 1)}
    assert polygon_area(hull) == pytest.approx(1.0)


def test_collinear_boundary_points_dropped():
    hull = convex_hull_2d([(0, 0), (0.5, 0), (1, 0), (1, 1), (0, 1)])
    assert len(hull) == 4


@pytest.mark.parametrize("seed", range(20))
def test_random_cloud(seed):
    pts = np.random.default_rng(seed).normal(size=(100, 2))
    hull = convex_hull_2d(pts)
    assert polygon_area(hull) > 0  # counterclockwise
    m = len(hull)
    for k in range(m):
        a, b, c = hull[k], hull[(k + 1) % m], hull[(k + 2) % m]
        assert (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) > 0
    assert all(point_in_polygon(hull, p) for p in pts)
    np.testing.assert_array_equal(convex_hull_2d(hull), hull)


def test_point_outside():
    square = convex_hull_2d([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert not point_in_polygon(square, (1.5, 0.5))
    assert point_in_polygon(square, (1.0, 0.5))


@pytest.mark.parametrize(
    "pts", [[(0, 0), (1, 1)], [(0, 0), (1, 1), (2, 2), (3, 3)], [(1, 1)] * 5]
)
def test_degenerate(pts):
    with pytest.raises(DegenerateHullError):
        convex_hull_2d(pts)


def test_bad_shape():
    with pytest.raises(ValueError):
        convex_hull_2d(np.zeros((4, 3)))
