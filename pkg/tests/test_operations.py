import math

import numpy as np
import pytest

from torocircle import (
    INF,
    Branch,
    HartHyperbola,
    HartLine,
    Homeo,
    IntersectionKind,
    MoebiusGraph,
    MoebiusMap,
    NotTouching,
    Plane,
    PreconditionViolated,
    SequenceSpec,
    SpecViolation,
    TorusPoint,
    alpha_join,
    beta_touch_point,
    circle_equal,
    gamma_intersect,
    hausdorff_h,
    k4_probe,
    membership_residual,
    metric_e,
    pi_minus_projection,
    pi_parallel_intersection,
    pi_plus_projection,
    point_at_angle,
    s1,
    s1_close,
    sample_circle,
    touching_solver,
)
from torocircle.circle_geometry import pairwise_nonparallel
from torocircle.errors import EqualCircles
from torocircle.verification import random_circle, random_nonparallel_triple, random_point


CLASSICAL = Plane.classical()
HARTMANN = Plane.hartmann(1.0, 1.0, 1.0, 1.0)


# joining and projections -------------------------------------------------------

def test_alpha_join_dispatch():
    C = alpha_join(CLASSICAL, TorusPoint.of(0, 0), TorusPoint.of(1, 1),
                   TorusPoint.of("inf", "inf"))
    assert isinstance(C, MoebiusGraph)
    D = alpha_join(CLASSICAL, TorusPoint.of(0, 1), TorusPoint.of(1, "inf"),
                   TorusPoint.of("inf", 0))
    assert s1_close(D.eval(s1(0.5)), s1(2.0), 1e-12)  # 1/(1-x) at 1/2
    H = alpha_join(HARTMANN, TorusPoint.of(0, 1), TorusPoint.of(2, 3),
                   TorusPoint.of("inf", 2))
    assert isinstance(H, HartHyperbola)
    assert (H.a, H.b, H.c) == pytest.approx((1.0, 1.0, 2.0), abs=1e-12)


def test_pi_parallel_intersection():
    assert pi_parallel_intersection(TorusPoint.of(1, 2), TorusPoint.of(3, 4)) == TorusPoint.of(1, 4)
    p = TorusPoint.of(5, 7)
    assert pi_parallel_intersection(p, p) == p
    out = pi_parallel_intersection(TorusPoint.of("inf", 0), TorusPoint.of(0, "inf"))
    assert out.x.is_inf and out.y.is_inf


def test_projections():
    line = HartLine(1.0, 0.0)
    assert pi_plus_projection(TorusPoint.of(5, 7), line) == TorusPoint.of(5, 5)
    assert pi_minus_projection(TorusPoint.of(5, 7), line) == TorusPoint.of(7, 7)
    hyp = HartHyperbola(1.0, 1.0, 2.0, Branch.POS, 1.0, 1.0)
    out = pi_plus_projection(TorusPoint.of(1, 9), hyp)
    assert out.x.value == 1.0 and out.y.is_inf


def test_projection_consistency_random():
    rng = np.random.default_rng(14)
    for _ in range(2000):
        C = random_circle(CLASSICAL, rng)
        p = random_point(rng)
        plus = pi_plus_projection(p, C)
        assert s1_close(plus.x, p.x)
        assert membership_residual(C, plus) <= 1e-9
        minus = pi_minus_projection(p, C)
        assert s1_close(minus.y, p.y)
        assert membership_residual(C, minus) <= 1e-9


# intersection --------------------------------------------------------------------

def test_gamma_secant():
    C = MoebiusGraph(MoebiusMap.identity())
    D = MoebiusGraph(MoebiusMap(2.0, 0.0, 0.0, 1.0))
    result = gamma_intersect(C, D, plane=CLASSICAL)
    assert result.kind is IntersectionKind.SECANT
    labels = {"inf" if pt.x.is_inf else str(round(pt.x.value, 9))
              for pt in result.points}
    assert labels == {"0.0", "inf"}


def test_gamma_disjoint():
    C = MoebiusGraph(MoebiusMap.identity())
    D = MoebiusGraph(MoebiusMap(0.0, -1.0, 1.0, 0.0))  # -1/x
    result = gamma_intersect(C, D, plane=CLASSICAL)
    assert result.kind is IntersectionKind.DISJOINT


def test_gamma_touching():
    C = MoebiusGraph(MoebiusMap.identity())
    D = MoebiusGraph(MoebiusMap(1.0, 0.0, 1.0, 1.0))  # x/(x+1)
    result = gamma_intersect(C, D, plane=CLASSICAL)
    assert result.kind is IntersectionKind.TOUCHING
    assert metric_e(result.points[0], TorusPoint.of(0, 0)) <= 1e-9


def test_gamma_equal_circles():
    C = MoebiusGraph(MoebiusMap.identity())
    with pytest.raises(EqualCircles):
        gamma_intersect(C, MoebiusGraph(MoebiusMap(2.0, 0.0, 0.0, 2.0)), plane=CLASSICAL)


def test_gamma_two_point_bound_random():
    rng = np.random.default_rng(23)
    for plane in (CLASSICAL, HARTMANN):
        for _ in range(1000):
            C = random_circle(plane, rng)
            D = random_circle(plane, rng)
            try:
                result = gamma_intersect(C, D, plane=plane)
            except EqualCircles:
                continue
            assert len(result.points) <= 2


def test_beta_touch_point():
    C = MoebiusGraph(MoebiusMap.identity())
    D = MoebiusGraph(MoebiusMap(1.0, 0.0, 1.0, 1.0))
    pt = beta_touch_point(C, D, plane=CLASSICAL)
    assert metric_e(pt, TorusPoint.of(0, 0)) <= 1e-9
    with pytest.raises(NotTouching):
        beta_touch_point(C, MoebiusGraph(MoebiusMap(2.0, 0.0, 0.0, 1.0)), plane=CLASSICAL)


def test_parallel_hart_lines_touch_at_infinity():
    C = HartLine(1.0, 0.0)
    D = HartLine(1.0, 1.0)
    result = gamma_intersect(C, D, plane=HARTMANN)
    assert result.kind is IntersectionKind.TOUCHING
    assert result.points[0].x.is_inf and result.points[0].y.is_inf


# touching solver ------------------------------------------------------------------

def test_touching_classical_finite():
    C = MoebiusGraph(MoebiusMap.identity())
    D = touching_solver(CLASSICAL, C, TorusPoint.of(0, 0), TorusPoint.of("inf", 1))
    # tangency at 0 with q pinning the remaining coefficient gives x/(x+1)
    assert circle_equal(D, MoebiusGraph(MoebiusMap(1.0, 0.0, 1.0, 1.0)))


def test_touching_classical_at_infinity():
    C = MoebiusGraph(MoebiusMap.identity())
    D = touching_solver(CLASSICAL, C, TorusPoint.of("inf", "inf"), TorusPoint.of(0, 1))
    assert circle_equal(D, MoebiusGraph(MoebiusMap(1.0, 1.0, 0.0, 1.0)))


def test_touching_hartmann_line():
    C = HartLine(1.0, 0.0)
    D = touching_solver(HARTMANN, C, TorusPoint.of("inf", "inf"), TorusPoint.of(0, 1))
    assert isinstance(D, HartLine)
    assert (D.slope, D.intercept) == pytest.approx((1.0, 1.0), abs=1e-12)


def test_touching_precondition():
    C = MoebiusGraph(MoebiusMap.identity())
    with pytest.raises(PreconditionViolated):
        touching_solver(CLASSICAL, C, TorusPoint.of(0, 1), TorusPoint.of(2, 5))
    with pytest.raises(PreconditionViolated):
        touching_solver(CLASSICAL, C, TorusPoint.of(0, 0), TorusPoint.of(3, 3))


@pytest.mark.parametrize("plane", [CLASSICAL, HARTMANN, Plane.hartmann(2.0, 0.5, 1.0, 3.0)])
def test_touching_random_instances(plane):
    rng = np.random.default_rng(37)
    done = 0
    while done < 120:
        C = random_circle(plane, rng)
        x = point_at_angle(rng.uniform(0, 2 * math.pi))
        p = TorusPoint(x, C.eval(x))
        q = random_point(rng)
        if not pairwise_nonparallel([p, q]):
            continue
        if membership_residual(C, q) < 1e-6:
            continue
        D = touching_solver(plane, C, p, q)
        assert membership_residual(D, p) <= 1e-7
        assert membership_residual(D, q) <= 1e-7
        result = gamma_intersect(C, D, plane=plane)
        assert result.kind is IntersectionKind.TOUCHING
        assert metric_e(result.points[0], p) <= 1e-3
        done += 1


def test_beta_touch_point_close_to_p():
    # conditioning-friendly q values keep the contact resolvable
    rng = np.random.default_rng(41)
    done = 0
    while done < 100:
        C = random_circle(CLASSICAL, rng)
        x = point_at_angle(rng.uniform(0, 2 * math.pi))
        p = TorusPoint(x, C.eval(x))
        q = random_point(rng)
        if not pairwise_nonparallel([p, q]):
            continue
        if membership_residual(C, q) < 1e-2:
            continue
        D = touching_solver(CLASSICAL, C, p, q)
        pt = beta_touch_point(C, D, plane=CLASSICAL)
        assert metric_e(pt, p) <= 1e-7
        done += 1


# continuity probe ------------------------------------------------------------------

from torocircle import chart_distance


def _well_conditioned_triple(rng):
    while True:
        pts = random_nonparallel_triple(rng)
        good = True
        for i in range(3):
            for j in range(i + 1, 3):
                if (chart_distance(pts[i].x, pts[j].x) < 0.1
                        or chart_distance(pts[i].y, pts[j].y) < 0.1):
                    good = False
        if good:
            return pts


def test_join_continuity_probe():
    # observed sensitivity stays around 1e2 for conditioned triples and
    # scales linearly between the two perturbation sizes
    rng = np.random.default_rng(53)
    for _ in range(150):
        pts = _well_conditioned_triple(rng)
        C = alpha_join(CLASSICAL, *pts)
        changes = {}
        for delta in (1e-4, 1e-6):
            tx, ty = pts[0].angles()
            moved = TorusPoint(point_at_angle(tx + delta), point_at_angle(ty))
            if not pairwise_nonparallel([moved, pts[1], pts[2]]):
                break
            D = alpha_join(CLASSICAL, moved, pts[1], pts[2])
            changes[delta] = hausdorff_h(sample_circle(C, 256), sample_circle(D, 256))
        for delta, change in changes.items():
            assert change <= 300.0 * delta


def test_gamma_continuity_probe():
    rng = np.random.default_rng(59)
    delta = 1e-4
    checked = 0
    while checked < 60:
        pts1 = _well_conditioned_triple(rng)
        pts2 = _well_conditioned_triple(rng)
        C = alpha_join(CLASSICAL, *pts1)
        D = alpha_join(CLASSICAL, *pts2)
        result = gamma_intersect(C, D, plane=CLASSICAL)
        if result.kind is not IntersectionKind.SECANT:
            continue
        tx, ty = pts2[0].angles()
        moved = TorusPoint(point_at_angle(tx + delta), point_at_angle(ty))
        if not pairwise_nonparallel([moved, pts2[1], pts2[2]]):
            continue
        D2 = alpha_join(CLASSICAL, moved, pts2[1], pts2[2])
        result2 = gamma_intersect(C, D2, plane=CLASSICAL)
        if result2.kind is not IntersectionKind.SECANT:
            continue
        moves = [min(metric_e(a, b) for b in result2.points) for a in result.points]
        assert max(moves) <= 300.0 * delta
        checked += 1


# tripod probe ----------------------------------------------------------------------

def _tripod_specs():
    tripod = [
        SequenceSpec(TorusPoint.of(0.0, 0.0), dx=0.1, dy=0.08, power=1.5),
        SequenceSpec(TorusPoint.of(0.0, 1.0), dx=-0.08, dy=0.05, power=1.5),
        SequenceSpec(TorusPoint.of(1.0, 3.0), dx=0.05, dy=-0.08, power=1.5),
    ]
    extra = SequenceSpec(TorusPoint.of(2.0, -1.0), dx=0.08, dy=0.1, power=1.5)
    return tripod, extra


def test_k4_probe_passes():
    tripod, extra = _tripod_specs()
    report = k4_probe(CLASSICAL, tripod, extra, n_max=1000, tol=1e-4)
    assert report.passed
    assert report.final_minus <= 1e-4
    assert report.final_plus <= 1e-4


def test_k4_probe_constant_sequences():
    # degenerate constant data: distances stay at their first values
    tripod = [
        SequenceSpec(TorusPoint.of(0.0, 0.0), dx=0.0, dy=0.0),
        SequenceSpec(TorusPoint.of(1.0, 1.0), dx=0.0, dy=0.0),
        SequenceSpec(TorusPoint.of(2.0, 3.0), dx=0.0, dy=0.0),
    ]
    extra = SequenceSpec(TorusPoint.of(4.0, 5.0), dx=0.0, dy=0.0)
    report = k4_probe(CLASSICAL, tripod, extra, n_max=50, tol=1e-4,
                      check_hypotheses=False)
    assert report.minus_distances[0] == pytest.approx(report.minus_distances[-1])
    assert report.plus_distances[0] == pytest.approx(report.plus_distances[-1])


def test_k4_probe_rejects_parallel_extra():
    tripod, _ = _tripod_specs()
    bad_extra = SequenceSpec(TorusPoint.of(0.0, 5.0), dx=0.1, dy=0.1)
    with pytest.raises(SpecViolation):
        k4_probe(CLASSICAL, tripod, bad_extra, n_max=10)
