import math

import numpy as np
from scipy.optimize import brentq

from idtgvd.geom import (
    cone_crossings_on_axis,
    cone_value,
    circumcenter_2d,
    equidistant_point,
    opposite_angle,
    point_in_tri_2d,
    tri_area_from_lengths,
)


def test_unweighted_crossing_is_perpendicular_bisector():
    roots = cone_crossings_on_axis(0.0, -1.0, 0.0, 4.0, -1.0, 0.0, -10.0, 10.0)
    assert len(roots) == 1
    assert abs(roots[0] - 2.0) < 1e-12


def test_weighted_crossing_matches_scalar_root():
    A = (0.3, -1.2, 0.0)
    B = (4.1, -0.4, 0.9)

    def f(t):
        return cone_value(*A, t, 0.0) - cone_value(*B, t, 0.0)

    t_ref = brentq(f, -10.0, 10.0, xtol=1e-14)
    roots = cone_crossings_on_axis(*A, *B, -10.0, 10.0)
    assert any(abs(r - t_ref) < 1e-9 for r in roots)


def test_identical_cones_yield_no_crossings():
    assert cone_crossings_on_axis(1.0, -1.0, 0.5, 1.0, -1.0, 0.5, 0.0, 5.0) == []


def test_crossings_respect_interval_clip():
    roots = cone_crossings_on_axis(0.0, -1.0, 0.0, 4.0, -1.0, 0.0, 3.0, 10.0)
    assert roots == []


def test_equidistant_point_unweighted_is_circumcenter():
    pts = [(0.0, 0.0), (3.0, 0.2), (1.0, 2.5)]
    sols = equidistant_point([(x, y, 0.0) for x, y in pts])
    cc = circumcenter_2d(*pts[0], *pts[1], *pts[2])
    assert len(sols) >= 1
    best = min(sols, key=lambda s: (s[0] - cc[0]) ** 2 + (s[1] - cc[1]) ** 2)
    assert math.hypot(best[0] - cc[0], best[1] - cc[1]) < 1e-9


def test_equidistant_point_weighted_consistency():
    rng = np.random.default_rng(7)
    found = 0
    for _ in range(50):
        cones = [
            (rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.0, 1.0))
            for _ in range(3)
        ]
        for zx, zy, dv in equidistant_point(cones):
            found += 1
            for (qx, qy, d0) in cones:
                assert abs(math.hypot(zx - qx, zy - qy) + d0 - dv) < 1e-7
    assert found > 20


def test_triangle_helpers():
    # 3-4-5 right triangle
    assert abs(tri_area_from_lengths(3.0, 4.0, 5.0) - 6.0) < 1e-12
    assert abs(opposite_angle(5.0, 3.0, 4.0) - math.pi / 2.0) < 1e-12
    assert point_in_tri_2d(0.2, 0.2, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0)
    assert not point_in_tri_2d(0.9, 0.9, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0)
