"""Planar convex hulls by Andrew's monotone chain."""

from __future__ import annotations

import numpy as np


class DegenerateHullError(ValueError):
    """Fewer than three distinct points, or all points collinear."""


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points) -> np.ndarray:
    """Vertices of the convex hull in counterclockwise order.

    Collinear boundary points are dropped, so the result is the minimal
    vertex set.  Raises :class:`DegenerateHullError` when the points do not
    span a polygon of positive area.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (m, 2)")
    uniq = sorted(set(map(tuple, pts.tolist())))
    if len(uniq) < 3:
        raise DegenerateHullError("need at least three distinct points")

    lower: list[tuple[float, float]] = []
    for p in uniq:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(uniq):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateHullError("points are collinear")
    return np.array(hull)


def polygon_area(vertices) -> float:
    """Shoelace area; positive for counterclockwise vertex order."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def point_in_polygon(vertices, point, tol: float = 1e-12) -> bool:
    """Inside-or-on test for a convex counterclockwise polygon."""
    v = np.asarray(vertices, dtype=float)
    m = len(v)
    return all(_cross(v[k], v[(k + 1) % m], point) >= -tol for k in range(m))
