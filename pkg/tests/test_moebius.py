import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torocircle import (
    INF,
    DegenerateInput,
    MoebiusMap,
    chart_distance,
    cross_ratio,
    mobius_apply,
    mobius_compose,
    mobius_from_three_pairs,
    mobius_inverse,
    s1,
    s1_close,
)


def test_apply_identity():
    m = MoebiusMap.identity()
    assert mobius_apply(m, s1(7.0)).value == 7.0


def test_apply_at_infinity():
    # (0*x + 1) / (-x + 1) tends to 0 as x grows
    m = MoebiusMap(0.0, 1.0, -1.0, 1.0)
    assert mobius_apply(m, INF).value == 0.0


def test_apply_fixes_infinity_when_affine():
    m = MoebiusMap(2.0, 0.0, 0.0, 1.0)
    assert mobius_apply(m, INF).is_inf


def test_apply_pole_goes_to_infinity():
    m = MoebiusMap(0.0, 1.0, -1.0, 1.0)  # x -> 1/(1-x)
    assert mobius_apply(m, s1(1.0)).is_inf


def test_from_three_pairs_identity():
    m = mobius_from_three_pairs([s1(0), s1(1), INF], [s1(0), s1(1), INF])
    assert m == MoebiusMap.identity()


def test_from_three_pairs_cycle():
    # solving the three interpolation conditions by hand gives 1/(1-x)
    m = mobius_from_three_pairs([s1(0), s1(1), INF], [s1(1), INF, s1(0)])
    assert m.coefficients == pytest.approx((0.0, 1.0, -1.0, 1.0), abs=1e-14)
    for x, y in ((s1(0), s1(1)), (s1(1), INF), (INF, s1(0))):
        assert s1_close(m.apply(x), y, 1e-12)


def test_from_three_pairs_doubling():
    # infinity to infinity forces c = 0, the finite conditions force 2x
    m = mobius_from_three_pairs([s1(0), s1(1), INF], [s1(0), s1(2), INF])
    assert s1_close(m.apply(s1(3.0)), s1(6.0), 1e-12)
    assert m.c == 0.0


def test_from_three_pairs_rejects_repeats():
    with pytest.raises(DegenerateInput):
        mobius_from_three_pairs([s1(0), s1(0), INF], [s1(0), s1(1), s1(2)])
    with pytest.raises(DegenerateInput):
        mobius_from_three_pairs([s1(0), s1(1), INF], [s1(2), s1(2), s1(3)])


def test_compose_identity_and_inverse():
    m = MoebiusMap(3.0, 1.0, 2.0, 5.0)
    assert mobius_compose(MoebiusMap.identity(), m) == m
    assert mobius_compose(m, mobius_inverse(m)) == MoebiusMap.identity()


def test_compose_affine():
    # [[2,0],[0,1]] . [[1,1],[0,1]] = [[2,2],[0,1]]
    double = MoebiusMap(2.0, 0.0, 0.0, 1.0)
    shift = MoebiusMap(1.0, 1.0, 0.0, 1.0)
    assert mobius_compose(double, shift) == MoebiusMap(2.0, 2.0, 0.0, 1.0)


@pytest.mark.parametrize("coeffs,sign", [
    ((1.0, 0.0, 0.0, 1.0), 1),
    ((0.0, 1.0, 1.0, 0.0), -1),   # det of [[0,1],[1,0]] is -1
    ((0.0, 1.0, -1.0, 1.0), 1),   # det of [[0,1],[-1,1]] is 1
])
def test_det_sign(coeffs, sign):
    assert MoebiusMap(*coeffs).det_sign == sign


def test_det_sign_multiplicative():
    rng = np.random.default_rng(3)
    for _ in range(300):
        m1 = _random_map(rng)
        m2 = _random_map(rng)
        assert m1.compose(m2).det_sign == m1.det_sign * m2.det_sign


def test_normalization_idempotent_and_scale_free():
    m = MoebiusMap(2.0, 4.0, 6.0, 10.0)
    again = MoebiusMap(*m.coefficients)
    assert m.coefficients == again.coefficients
    scaled = MoebiusMap(-3.0 * 2.0, -3.0 * 4.0, -3.0 * 6.0, -3.0 * 10.0)
    assert m == scaled


def test_composition_normalization_scale_independent():
    rng = np.random.default_rng(11)
    for _ in range(200):
        m1 = _random_map(rng)
        m2 = _random_map(rng)
        scale1 = float(rng.uniform(0.1, 10.0))
        scale2 = float(rng.uniform(0.1, 10.0))
        m1s = MoebiusMap(*(scale1 * v for v in m1.coefficients))
        m2s = MoebiusMap(*(-scale2 * v for v in m2.coefficients))
        assert m1.compose(m2).approx_equal(m1s.compose(m2s), 1e-10)


def _random_map(rng) -> MoebiusMap:
    while True:
        coeffs = rng.normal(size=4)
        if abs(coeffs[0] * coeffs[3] - coeffs[1] * coeffs[2]) > 1e-2:
            return MoebiusMap(*coeffs)


def _random_distinct_points(rng, count):
    while True:
        thetas = rng.uniform(0.0, 2.0 * math.pi, size=count)
        pts = [s1(math.tan(t / 2.0)) if abs(t - math.pi) > 1e-9 else INF
               for t in thetas]
        ok = all(not s1_close(pts[i], pts[j], 1e-6)
                 for i in range(count) for j in range(i + 1, count))
        if ok:
            return pts


def test_interpolation_reproduces_images():
    # the core contract: 10^4 random triples reproduce their targets
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(10_000):
        src = _random_distinct_points(rng, 3)
        dst = _random_distinct_points(rng, 3)
        m = mobius_from_three_pairs(src, dst)
        for x, y in zip(src, dst):
            worst = max(worst, chart_distance(m.apply(x), y))
    assert worst <= 1e-9


def test_cross_ratio_preserved():
    rng = np.random.default_rng(7)
    for _ in range(500):
        m = _random_map(rng)
        pts = _random_distinct_points(rng, 4)
        images = [m.apply(p) for p in pts]
        cr1 = cross_ratio(*pts)
        cr2 = cross_ratio(*images)
        assert abs(cr1 - cr2) <= 1e-9 * max(1.0, abs(cr1))


def test_apply_enc_matches_scalar():
    rng = np.random.default_rng(5)
    for _ in range(50):
        m = _random_map(rng)
        xs = rng.normal(scale=5.0, size=64)
        enc = m.apply_enc(xs)
        for x, e in zip(xs, enc):
            scalar = m.apply(s1(float(x)))
            assert s1_close(scalar, s1(float(e)) if math.isfinite(e) else INF, 1e-10)


@given(st.floats(-50.0, 50.0), st.floats(-50.0, 50.0), st.floats(-50.0, 50.0),
       st.floats(-50.0, 50.0), st.floats(-100.0, 100.0))
@settings(max_examples=200)
def test_apply_inverse_roundtrip(a, b, c, d, x):
    det = a * d - b * c
    if abs(det) < 1e-3:
        return
    m = MoebiusMap(a, b, c, d)
    y = m.apply(s1(x))
    back = m.inverse().apply(y)
    assert chart_distance(back, s1(x)) <= 1e-8
