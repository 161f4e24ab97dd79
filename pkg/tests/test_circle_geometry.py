import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torocircle import (
    INF,
    DegenerateInput,
    EmptyInput,
    Parallel,
    S1Point,
    TorusPoint,
    angle_of,
    chart_distance,
    cyclic_between,
    hausdorff_h,
    metric_e,
    parallel_relation,
    point_at_angle,
    s1,
    s1_close,
)


def test_s1_point_basics():
    assert s1("inf").is_inf
    assert s1(float("inf")).is_inf
    assert s1(2.5).value == 2.5
    assert S1Point(-0.0).value == 0.0
    with pytest.raises(DegenerateInput):
        S1Point(float("nan"))


@pytest.mark.parametrize("x,theta", [
    (0.0, 0.0),
    ("inf", math.pi),
    (1.0, math.pi / 2.0),
])
def test_angle_of(x, theta):
    assert angle_of(s1(x)) == pytest.approx(theta, abs=1e-15)


def test_angle_roundtrip():
    for theta in np.linspace(0.0, 2.0 * math.pi, 1000, endpoint=False):
        back = angle_of(point_at_angle(float(theta)))
        assert abs(back - theta) <= 1e-12


def test_chart_distance_near_infinity():
    a = s1(1e9)
    b = s1(2e9)
    assert chart_distance(a, b) == pytest.approx(0.5e-9, rel=1e-9)
    assert chart_distance(s1(1e15), INF) <= 1e-12 * 10
    assert chart_distance(s1(0.0), INF) >= 1.0


@pytest.mark.parametrize("p,q,rel", [
    ((1, 2), (1, 5), Parallel.PLUS),
    ((1, 2), (3, 2), Parallel.MINUS),
    ((1, 2), (3, 4), Parallel.NONE),
    ((1, 2), (1, 2), Parallel.EQUAL),
])
def test_parallel_relation(p, q, rel):
    assert parallel_relation(TorusPoint.of(*p), TorusPoint.of(*q)) is rel


def test_metric_e_examples():
    p = TorusPoint.of(0, 0)
    assert metric_e(p, p) == 0.0
    # evaluating the embedding: (3,0,0) vs (1,0,0)
    assert metric_e(p, TorusPoint.of(0, "inf")) == pytest.approx(2.0, abs=1e-14)
    # (3,0,0) vs (-3,0,0)
    assert metric_e(p, TorusPoint.of("inf", 0)) == pytest.approx(6.0, abs=1e-14)


def test_metric_e_symmetry_and_triangle():
    rng = np.random.default_rng(42)
    for _ in range(10_000):
        pts = [TorusPoint(point_at_angle(rng.uniform(0, 2 * math.pi)),
                          point_at_angle(rng.uniform(0, 2 * math.pi)))
               for _ in range(3)]
        dab = metric_e(pts[0], pts[1])
        dba = metric_e(pts[1], pts[0])
        dbc = metric_e(pts[1], pts[2])
        dac = metric_e(pts[0], pts[2])
        assert abs(dab - dba) <= 1e-12
        assert dac <= dab + dbc + 1e-12


def test_hausdorff_examples():
    a = [TorusPoint.of(0, 0)]
    b = [TorusPoint.of(0, "inf")]
    assert hausdorff_h(a, a) == 0.0
    # the single-pair case reduces to the point metric
    assert hausdorff_h(a, b) == pytest.approx(2.0, abs=1e-14)
    # directed distances are 0 and 2, the max wins
    both = [TorusPoint.of(0, 0), TorusPoint.of(0, "inf")]
    assert hausdorff_h(a, both) == pytest.approx(2.0, abs=1e-14)


def test_hausdorff_empty():
    with pytest.raises(EmptyInput):
        hausdorff_h([], [TorusPoint.of(0, 0)])


def test_hausdorff_zero_iff_equal():
    rng = np.random.default_rng(9)
    pts = [TorusPoint(point_at_angle(rng.uniform(0, 2 * math.pi)),
                      point_at_angle(rng.uniform(0, 2 * math.pi)))
           for _ in range(32)]
    assert hausdorff_h(pts, list(reversed(pts))) == 0.0
    moved = pts[:-1] + [TorusPoint.of(100.0, 100.0)]
    assert hausdorff_h(pts, moved) > 1e-6


@pytest.mark.parametrize("a,b,c,expected", [
    (0, 1, "inf", True),     # angles 0, pi/2, pi
    (0, "inf", 1, False),    # pi is not inside (0, pi/2)
    (1, "inf", -1, True),    # angles pi/2, pi, 3pi/2
])
def test_cyclic_between(a, b, c, expected):
    assert cyclic_between(s1(a), s1(b), s1(c)) is expected


def test_cyclic_between_rejects_repeats():
    with pytest.raises(DegenerateInput):
        cyclic_between(s1(0), s1(0), s1(1))


@given(st.floats(0, 2 * math.pi - 1e-9), st.floats(0, 2 * math.pi - 1e-9),
       st.floats(0, 2 * math.pi - 1e-9))
@settings(max_examples=300)
def test_cyclic_between_orientation_flip(ta, tb, tc):
    a, b, c = point_at_angle(ta), point_at_angle(tb), point_at_angle(tc)
    if s1_close(a, b, 1e-9) or s1_close(b, c, 1e-9) or s1_close(a, c, 1e-9):
        return
    assert cyclic_between(a, b, c) != cyclic_between(c, b, a)
