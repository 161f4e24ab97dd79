"""The five geometric operations, plus the tripod convergence probe.

Joining dispatches to the plane solvers; parallel intersection and the two
parallel projections are coordinate selections; intersection locates all
common points of two circle graphs by a dense angle scan with bracketed
refinement; touching finds the circle through two points meeting a base
circle in exactly one point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .circle_geometry import (
    INF,
    Parallel,
    S1Point,
    TAU,
    TorusPoint,
    angle_of,
    chart_distance,
    enc_angle,
    enc_from_angle,
    metric_e,
    nonparallel,
    parallel_relation,
    point_at_angle,
    s1_close,
)
from .errors import (
    EqualCircles,
    JoinFailure,
    NoTouchingCircle,
    NotTouching,
    ParallelInput,
    PreconditionViolated,
    SpecViolation,
    TooManyIntersections,
)
from .moebius import MoebiusMap
from .planes import (
    Branch,
    Circle,
    HartHyperbola,
    HartLine,
    Homeo,
    MoebiusGraph,
    Plane,
    SwappedGraph,
    Tolerances,
    _bracket_roots,
    _dedupe_scalars,
    _interval_seeds,
    _semi_f,
    _semi_f_inv,
    membership_residual,
    underlying_moebius,
)


# joining and the parallel operations -----------------------------------------

def alpha_join(plane: Plane, p1: TorusPoint, p2: TorusPoint, p3: TorusPoint) -> Circle:
    """The unique circle of the plane through three pairwise nonparallel points."""
    return plane.join(p1, p2, p3)


def pi_parallel_intersection(p: TorusPoint, q: TorusPoint) -> TorusPoint:
    """Meet of the vertical through p with the horizontal through q."""
    return TorusPoint(p.x, q.y)


def pi_plus_projection(p: TorusPoint, C: Circle) -> TorusPoint:
    """Meet of the vertical through p with the circle."""
    return TorusPoint(p.x, C.eval(p.x))


def pi_minus_projection(p: TorusPoint, C: Circle) -> TorusPoint:
    """Meet of the horizontal through p with the circle."""
    return TorusPoint(C.inv_eval(p.y), p.y)


# intersection -----------------------------------------------------------------

class IntersectionKind(Enum):
    DISJOINT = "disjoint"
    TOUCHING = "touching"
    SECANT = "secant"


@dataclass(frozen=True)
class IntersectionResult:
    points: Tuple[TorusPoint, ...]
    kind: IntersectionKind

    def __post_init__(self):
        expected = {0: IntersectionKind.DISJOINT,
                    1: IntersectionKind.TOUCHING,
                    2: IntersectionKind.SECANT}[len(self.points)]
        if expected is not self.kind:
            raise ValueError("intersection kind inconsistent with point count")


def _wrap_array(d: np.ndarray) -> np.ndarray:
    return d - TAU * np.round(d / TAU)


def _angle_diff_scalar(C: Circle, D: Circle, theta: float) -> float:
    x = point_at_angle(theta)
    d = angle_of(C.eval(x)) - angle_of(D.eval(x))
    d = math.fmod(d, TAU)
    if d > math.pi:
        d -= TAU
    elif d <= -math.pi:
        d += TAU
    return d


def _bisect_angle_root(C: Circle, D: Circle, lo: float, hi: float,
                       flo: float, refine: float) -> float:
    sign_lo = flo > 0.0
    while hi - lo > refine:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fmid = _angle_diff_scalar(C, D, mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0.0) == sign_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_min_abs(C: Circle, D: Circle, lo: float, hi: float,
                    refine: float) -> Tuple[float, float]:
    """Golden-section minimum of |angle difference| on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = abs(_angle_diff_scalar(C, D, c))
    fd = abs(_angle_diff_scalar(C, D, d))
    while b - a > refine:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = abs(_angle_diff_scalar(C, D, c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = abs(_angle_diff_scalar(C, D, d))
    theta = c if fc <= fd else d
    return theta, min(fc, fd)


_SLOPE_STEP = 1e-4


def _refine_tangential(C: Circle, D: Circle, lo: float, hi: float,
                       refine: float) -> Tuple[float, float]:
    """Locate an extremum of the angle difference by slope-sign bisection.

    A tangential contact is a zero extremum of the difference; the centered
    slope crosses zero transversally there, so bisecting its sign locates
    the contact far more accurately than minimizing the flat |difference|.
    """
    step = min(_SLOPE_STEP, (hi - lo) / 8.0)

    def slope(theta: float) -> float:
        return (_angle_diff_scalar(C, D, theta + step)
                - _angle_diff_scalar(C, D, theta - step))

    slo, shi = slope(lo), slope(hi)
    if slo == 0.0:
        return lo, abs(_angle_diff_scalar(C, D, lo))
    if shi == 0.0 or slo * shi > 0.0:
        return _golden_min_abs(C, D, lo, hi, refine)
    sign_lo = slo > 0.0
    while hi - lo > refine:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        sm = slope(mid)
        if sm == 0.0:
            lo = hi = mid
            break
        if (sm > 0.0) == sign_lo:
            lo = mid
        else:
            hi = mid
    theta = _vertex_polish(C, D, 0.5 * (lo + hi))
    return theta, abs(_angle_diff_scalar(C, D, theta))


def _vertex_polish(C: Circle, D: Circle, theta: float) -> float:
    """Sharpen an extremum estimate of the angle difference.

    Fits a parabola through three samples at a step wide enough for the
    curvature signal to dominate evaluation noise; exact for a true
    parabola at any step size.
    """
    for _ in range(2):
        h = 1e-6
        f0 = _angle_diff_scalar(C, D, theta)
        while h < 2e-3:
            fp = _angle_diff_scalar(C, D, theta + h)
            fm = _angle_diff_scalar(C, D, theta - h)
            curv = fp - 2.0 * f0 + fm
            if abs(curv) > 1e-11:
                shift = -0.5 * h * (fp - fm) / curv
                if abs(shift) <= 2.0 * h:
                    theta = theta + shift
                break
            h *= 4.0
        else:
            break
    return theta


_TANGENT_WINDOW = 0.05  # coarse |difference| gate for tangency candidates
_ROOT_ACCEPT = 1e-6     # refined roots must come this close to zero difference
_POLE_HUG = 1e8         # graph values beyond this count as running into a pole


def _special_point_member(other: Circle, sp: TorusPoint, tol: float) -> bool:
    """Membership of a pole point of one circle in another circle.

    Tested through the finite coordinate: a shared pole means the pole
    positions coincide, not merely that the other graph is large there.
    """
    if sp.x.is_inf and sp.y.is_inf:
        return (chart_distance(other.eval(INF), INF) <= tol
                and chart_distance(other.inv_eval(INF), INF) <= tol)
    if sp.y.is_inf:
        return chart_distance(other.inv_eval(INF), sp.x) <= tol
    return chart_distance(other.eval(INF), sp.y) <= tol


def _scan_thetas(C: Circle, D: Circle, n: int, refine: float) -> np.ndarray:
    """Angle-uniform samples plus clusters around each circle's pole.

    Near a pole the graph's angle moves arbitrarily fast, so the uniform
    grid alone can mistake a wrap of the difference for a crossing; the
    geometric clusters resolve those neighbourhoods.
    """
    base = np.arange(n) * (TAU / n)
    clusters = [base]
    step = TAU / n
    for circle in (C, D):
        pole = circle.inv_eval(INF)
        centers = [angle_of(pole)] if not pole.is_inf else []
        for theta0 in centers:
            offs = np.geomspace(max(refine * 10.0, 1e-11), step, 48)
            clusters.append((theta0 + offs) % TAU)
            clusters.append((theta0 - offs) % TAU)
    return np.unique(np.concatenate(clusters))


def _refine_aliasing(C: Circle, D: Circle, thetas: np.ndarray,
                     refine: float, max_passes: int = 48):
    """Subdivide scan cells until each circle's angle moves slowly per cell.

    Both graphs are monotone circle maps, so their angles have total
    variation exactly one turn; only a bounded set of steep cells exists
    and the refinement terminates quickly.  Without it a steep segment
    aliases the wrapped difference and crossings there are lost.
    """
    with np.errstate(all="ignore"):
        yc = C.eval_enc(enc_from_angle(thetas))
        yd = D.eval_enc(enc_from_angle(thetas))
    sc, sd = C.orientation, D.orientation
    for _ in range(max_passes):
        ac = enc_angle(yc)
        ad = enc_angle(yd)
        # a monotone circle map travels forward (or backward) only, so the
        # oriented increment is the true angular travel across the cell
        travel_c = (sc * (np.roll(ac, -1) - ac)) % TAU
        travel_d = (sd * (np.roll(ad, -1) - ad)) % TAU
        width = np.roll(thetas, -1) - thetas
        width[-1] += TAU
        steep = (travel_c > 0.5) | (travel_d > 0.5)
        steep &= width > max(refine, 1e-12)
        if not np.any(steep):
            break
        mids = thetas[steep] + 0.5 * width[steep]
        with np.errstate(all="ignore"):
            mc = C.eval_enc(enc_from_angle(mids))
            md = D.eval_enc(enc_from_angle(mids))
        thetas = np.concatenate([thetas, mids])
        yc = np.concatenate([yc, mc])
        yd = np.concatenate([yd, md])
        order = np.argsort(thetas, kind="stable")
        thetas, yc, yd = thetas[order], yc[order], yd[order]
    return thetas, yc, yd


def gamma_intersect(C: Circle, D: Circle, plane: Plane = None,
                    samples: int = None, tol: Tolerances = None) -> IntersectionResult:
    """All common points of two distinct circles.

    The wrapped angle difference of the two graphs is scanned at
    angle-uniform samples (with extra resolution near the poles); sign
    changes are refined by bisection, flat near-zero minima (tangential
    contacts) by slope bisection, and the points with infinite coordinates
    are tested for shared membership.  Roots closer than the merge
    tolerance collapse to one point.
    """
    tol = tol or (plane.tol if plane is not None else Tolerances())
    n = samples or tol.gamma_samples
    merge = tol.root_merge

    thetas = _scan_thetas(C, D, n, tol.gamma_refine)
    thetas, yc, yd = _refine_aliasing(C, D, thetas, tol.gamma_refine)
    with np.errstate(all="ignore"):
        diff = _wrap_array(enc_angle(yc) - enc_angle(yd))
        # where both graphs run against their poles, the angle difference
        # drops below float resolution and cannot witness a crossing
        unresolved = (np.abs(yc) >= _POLE_HUG) & (np.abs(yd) >= _POLE_HUG)

    if np.all(np.abs(diff) <= merge):
        raise EqualCircles("intersection of two copies of the same circle")

    root_thetas: List[float] = []

    zero_mask = (np.abs(diff) <= 1e-13) & ~unresolved
    for i in np.nonzero(zero_mask)[0]:
        root_thetas.append(float(thetas[i]))

    # transversal crossings: vectorized sign-change detection, wrap-filtered
    nexts = np.roll(diff, -1)
    gaps = np.roll(thetas, -1) - thetas
    gaps[-1] += TAU
    bracket = ((diff * nexts < 0.0)
               & (np.abs(nexts - diff) < math.pi)
               & ~zero_mask & ~np.roll(zero_mask, -1)
               & ~unresolved & ~np.roll(unresolved, -1))
    for i in np.nonzero(bracket)[0]:
        lo = float(thetas[i])
        theta = _bisect_angle_root(C, D, lo, lo + float(gaps[i]),
                                   float(diff[i]), tol.gamma_refine)
        if abs(_angle_diff_scalar(C, D, theta)) <= _ROOT_ACCEPT:
            root_thetas.append(theta % TAU)

    # tangential contacts: flat local minima of the absolute difference
    absdiff = np.abs(diff)
    prev_abs = np.roll(absdiff, 1)
    next_abs = np.roll(absdiff, -1)
    minima = ((absdiff < _TANGENT_WINDOW) & ~zero_mask & ~unresolved
              & (absdiff <= prev_abs) & (absdiff <= next_abs)
              & (np.roll(diff, 1) * np.roll(diff, -1) > 0.0))
    for i in np.nonzero(minima)[0]:
        lo = float(thetas[i - 1])
        hi = lo + float(gaps[i - 1]) + float(gaps[i])
        theta, value = _refine_tangential(C, D, lo, hi, tol.gamma_refine)
        if value <= merge:
            root_thetas.append(theta % TAU)

    points: List[Tuple[float, TorusPoint]] = []
    for theta in root_thetas:
        x = point_at_angle(theta)
        points.append((theta % TAU, TorusPoint(x, C.eval(x))))

    # points with an infinite coordinate are tested through their finite
    # coordinate; the other direction runs through unbounded values
    for sp in C.special_points():
        if _special_point_member(D, sp, merge):
            points.append((angle_of(sp.x), sp))
    for sp in D.special_points():
        if _special_point_member(C, sp, merge):
            points.append((angle_of(sp.x), TorusPoint(sp.x, C.eval(sp.x))))

    points.sort(key=lambda item: item[0])
    merged: List[Tuple[float, TorusPoint]] = []
    for theta, pt in points:
        if merged and (theta - merged[-1][0]) <= max(merge, 2.0 * tol.gamma_refine):
            continue
        merged.append((theta, pt))
    # the scan is circular: first and last roots may be the same point
    if len(merged) > 1 and (merged[0][0] + TAU - merged[-1][0]) <= max(merge, 2.0 * tol.gamma_refine):
        merged.pop()

    if len(merged) == 1:
        # a lone even contact sits in a flat plateau of the difference;
        # the parabola vertex recovers the contact beyond scan resolution
        theta = merged[0][0]
        left = _angle_diff_scalar(C, D, theta - _SLOPE_STEP)
        right = _angle_diff_scalar(C, D, theta + _SLOPE_STEP)
        if left * right > 0.0:
            theta = _vertex_polish(C, D, theta) % TAU
            x = point_at_angle(theta)
            merged = [(theta, TorusPoint(x, C.eval(x)))]

    pts = tuple(pt for _, pt in merged)
    if len(pts) > 2:
        raise TooManyIntersections(
            f"{len(pts)} intersection points found for distinct circles",
            points=list(pts),
        )
    kind = {0: IntersectionKind.DISJOINT,
            1: IntersectionKind.TOUCHING,
            2: IntersectionKind.SECANT}[len(pts)]
    return IntersectionResult(pts, kind)


def beta_touch_point(C: Circle, D: Circle, plane: Plane = None) -> TorusPoint:
    """The single common point of a touching circle pair."""
    result = gamma_intersect(C, D, plane=plane)
    if result.kind is not IntersectionKind.TOUCHING:
        raise NotTouching(f"circles are {result.kind.value}, not touching")
    return result.points[0]


# touching solver ---------------------------------------------------------------

def touching_solver(plane: Plane, C: Circle, p: TorusPoint, q: TorusPoint,
                    tol: float = None, scan_offset: float = 0.0) -> Circle:
    """The circle through p and q meeting C only at p.

    p must lie on C, q off C and nonparallel to p.  Family-specific closed
    forms are tried first; the generic path scans the pencil of circles
    through p and q for the parameter where the secondary intersection
    with C collapses into p.  Every candidate is verified by intersection
    before it is returned.
    """
    tols = plane.tol
    tol = tol if tol is not None else tols.touch_tol
    if parallel_relation(p, q, tols.chart) is not Parallel.NONE:
        raise PreconditionViolated("p and q must be nonparallel")
    if membership_residual(C, p) > tols.join_closed:
        raise PreconditionViolated("p must lie on C")
    if membership_residual(C, q) <= tols.join_closed:
        raise PreconditionViolated("q must not lie on C")

    attempts: List[str] = []

    if plane.kind == Plane.HARTMANN:
        first = lambda: _touch_hartmann(plane, C, p, q)
    else:
        classical_like = (plane.kind == Plane.CLASSICAL or
                          (plane.f.kind == Homeo.IDENTITY and plane.g.kind == Homeo.IDENTITY))

        def first():
            cand = _touch_classical(C, p, q) if classical_like else None
            return [cand] if cand is not None else []

    stages = (
        first,
        lambda: _touch_seeded_pencil(plane, C, p, q),
        lambda: _touch_pencil_joins(plane, C, p, q, scan_offset),
    )

    for stage in stages:
        for cand in stage():
            verified = _verify_touch(plane, C, cand, p, tol)
            if verified is not None:
                return verified
            attempts.append(f"candidate rejected: {cand.describe()}")

    raise NoTouchingCircle("no circle through p and q meets C only at p",
                           report=attempts)


def _verify_touch(plane: Plane, C: Circle, D: Circle, p: TorusPoint,
                  tol: float) -> Optional[Circle]:
    try:
        result = gamma_intersect(C, D, plane=plane)
    except (EqualCircles, TooManyIntersections):
        return None
    if result.kind is not IntersectionKind.TOUCHING:
        return None
    # the kind check carries the logic; the located contact can wander by
    # the conditioning of a flat tangency, so the position gate is loose
    if metric_e(result.points[0], p) > max(tol, 1e-3):
        return None
    return D


def _touch_classical(C: Circle, p: TorusPoint, q: TorusPoint) -> Optional[Circle]:
    """Closed-form tangency in the classical plane.

    Conjugating by coordinate maps that send p to (inf, inf) turns circles
    through p into affine graphs; the touching circle is the parallel
    affine graph through the image of q.
    """
    mc = underlying_moebius(C)
    if mc is None:
        return None
    sx = MoebiusMap.identity() if p.x.is_inf else MoebiusMap(0.0, 1.0, 1.0, -p.x.value)
    sy = MoebiusMap.identity() if p.y.is_inf else MoebiusMap(0.0, 1.0, 1.0, -p.y.value)
    cprime = sy.compose(mc).compose(sx.inverse())
    if abs(cprime.d) <= 1e-12:
        return None
    slope = cprime.a / cprime.d
    qx = sx.apply(q.x)
    qy = sy.apply(q.y)
    if qx.is_inf or qy.is_inf:
        return None
    intercept = qy.value - slope * qx.value
    md = sy.inverse().compose(MoebiusMap(slope, intercept, 0.0, 1.0)).compose(sx)
    if md.det_sign == 1:
        return MoebiusGraph(md)
    return SwappedGraph(Homeo.identity(), md, Homeo.identity())


def _hart_slope(plane: Plane, C: Circle, px: float) -> Optional[float]:
    """Tangent slope of a Hartmann circle at a finite regular point."""
    if isinstance(C, HartLine):
        return C.slope
    if isinstance(C, HartHyperbola):
        u = px - C.b
        if u == 0.0:
            return None
        fu = _semi_f(C.r, C.s, u)
        if fu == 0.0 or not math.isfinite(fu):
            return None
        # f'(u)/f(u) = r/u for both signs of u
        return -C.a * C.r / (u * fu)
    return None


def _touch_hartmann(plane: Plane, C: Circle, p: TorusPoint,
                    q: TorusPoint) -> List[Circle]:
    """Analytic touching candidates for Hartmann planes.

    Infinite coordinates of p or q pin the hyperbola parameters; the finite
    generic case matches the tangent slope at p, which fixes the branch and
    leaves one scalar equation in the pole offset.  Several tangent members
    can exist; all are returned for verification.
    """
    if p.x.is_inf and p.y.is_inf:
        if not isinstance(C, HartLine) or q.x.is_inf or q.y.is_inf:
            return []
        return [HartLine(C.slope, q.y.value - C.slope * q.x.value)]

    if p.x.is_inf:
        # touching at the horizontal end: same branch, same a, pole from q
        if not isinstance(C, HartHyperbola) or q.x.is_inf:
            return []
        if q.y.is_inf:
            return [HartHyperbola(C.a, q.x.value, C.c, C.branch, C.r, C.s)]
        w = q.y.value - C.c
        if w == 0.0:
            return []
        u = _semi_f_inv(C.r, C.s, C.a / w)
        return [HartHyperbola(C.a, q.x.value - u, C.c, C.branch, C.r, C.s)]

    if p.y.is_inf:
        # touching at the shared pole: same branch, same a, asymptote from q
        if not isinstance(C, HartHyperbola) or q.y.is_inf or q.x.is_inf:
            return []
        fu = _semi_f(C.r, C.s, q.x.value - C.b)
        if fu == 0.0 or not math.isfinite(fu):
            return []
        return [HartHyperbola(C.a, C.b, q.y.value - C.a / fu, C.branch, C.r, C.s)]

    px, py = p.x.value, p.y.value
    k = _hart_slope(plane, C, px)
    if k is None or k == 0.0 or not math.isfinite(k):
        return []

    if q.x.is_inf and q.y.is_inf:
        return [HartLine(k, py - k * px)]

    branch = Branch.POS if k < 0.0 else Branch.NEG
    r, s = plane.branch_params(branch)

    if q.x.is_inf:
        dy = py - q.y.value
        if dy == 0.0:
            return []
        u = -r * dy / k
        fu = _semi_f(r, s, u)
        if fu == 0.0 or not math.isfinite(fu):
            return []
        cand = _safe_hyperbola(dy * fu, px - u, q.y.value, branch, r, s)
        return [cand] if cand is not None else []

    if q.y.is_inf:
        u = px - q.x.value
        fu = _semi_f(r, s, u)
        if fu == 0.0 or not math.isfinite(fu):
            return []
        a = -k * u * fu / r
        cand = _safe_hyperbola(a, q.x.value, py - a / fu, branch, r, s)
        return [cand] if cand is not None else []

    qx, qy = q.x.value, q.y.value
    w = qx - px
    dy = py - qy
    if abs(qy - (py + k * (qx - px))) <= 1e-9 * max(1.0, abs(qy)):
        return [HartLine(k, py - k * px)]

    def G(u, _r=r, _s=s):
        try:
            fu = _semi_f(_r, _s, u)
            fv = _semi_f(_r, _s, u + w)
            return (-k * u / _r) * (1.0 - fu / fv) - dy
        except ZeroDivisionError:
            return math.nan

    cuts = sorted({0.0, -w})
    intervals = [(-math.inf, cuts[0])]
    for i in range(len(cuts) - 1):
        intervals.append((cuts[i], cuts[i + 1]))
    intervals.append((cuts[-1], math.inf))

    roots: List[float] = []
    for lo, hi in intervals:
        seeds = _interval_seeds(lo, hi, plane.tol.join_seeds)
        with np.errstate(all="ignore"):
            vals = np.array([G(u) for u in seeds])
        roots.extend(_bracket_roots(G, seeds, vals))

    scored: List[Tuple[float, Circle]] = []
    for u in _dedupe_scalars(roots):
        fu = _semi_f(r, s, u)
        if fu == 0.0 or not math.isfinite(fu):
            continue
        a = -k * u * fu / r
        cand = _safe_hyperbola(a, px - u, py - a / fu, branch, r, s)
        if cand is None:
            continue
        res = max(membership_residual(cand, p), membership_residual(cand, q))
        if res <= plane.tol.join_iterative:
            scored.append((res, cand))
    scored.sort(key=lambda item: item[0])
    return [cand for _, cand in scored]


def _safe_hyperbola(a, b, c, branch, r, s) -> Optional[HartHyperbola]:
    if not all(math.isfinite(v) for v in (a, b, c)):
        return None
    if branch is Branch.POS and a <= 0.0:
        return None
    if branch is Branch.NEG and a >= 0.0:
        return None
    return HartHyperbola(a, b, c, branch, r, s)


# generic pencil scan -------------------------------------------------------------

def _secondary_offset(C: Circle, D: Circle, theta_p: float,
                      grid: int = 512) -> float:
    """Signed angle offset from p of the nearest other C/D intersection.

    The known root at p is deflated by sin(offset/2), which is positive on
    the whole sampled range.  A tangency at p leaves a deflated root at
    offset 0 (mod 2*pi); a far crossing leaves one at a large offset.  The
    offset of the root closest to p is returned, 0.0 when none exists.
    """
    step = TAU / grid
    near = np.geomspace(1e-9, step, 24)
    parts = [(np.arange(grid) + 0.5) * step, near, TAU - near]
    for circle in (C, D):
        pole = circle.inv_eval(INF)
        if not pole.is_inf:
            center = (angle_of(pole) - theta_p) % TAU
            cluster = np.geomspace(1e-10, step, 24)
            parts.append((center + cluster) % TAU)
            parts.append((center - cluster) % TAU)
    offsets = np.concatenate(parts)
    offsets = np.unique(offsets[(offsets > 0.0) & (offsets < TAU)])
    thetas = theta_p + offsets
    xs = enc_from_angle(thetas)
    with np.errstate(all="ignore"):
        diff = _wrap_array(enc_angle(C.eval_enc(xs)) - enc_angle(D.eval_enc(xs)))
        eta = diff / np.sin(offsets / 2.0)

    def eta_scalar(offset: float) -> float:
        d = _angle_diff_scalar(C, D, theta_p + offset)
        return d / math.sin(offset / 2.0)

    roots: List[float] = []
    with np.errstate(all="ignore"):
        finite = np.isfinite(eta)
        nxt = np.roll(eta, -1)
        jump = np.abs(np.roll(diff, -1) - diff)
        brackets = (finite & np.roll(finite, -1)
                    & (eta * nxt < 0.0) & (jump < math.pi))
        brackets[-1] = False
        zero_hits = finite & (eta == 0.0)
    for i in np.nonzero(zero_hits)[0]:
        roots.append(float(offsets[i]))
    for i in np.nonzero(brackets)[0]:
        lo, hi = float(offsets[i]), float(offsets[i + 1])
        sign_lo = float(eta[i]) > 0.0
        while hi - lo > 1e-9:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            fm = eta_scalar(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0.0) == sign_lo:
                lo = mid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    if not roots:
        return 0.0
    return min((_wrap_signed(r) for r in roots), key=abs)


def _wrap_signed(offset: float) -> float:
    off = math.fmod(offset, TAU)
    if off > math.pi:
        off -= TAU
    elif off <= -math.pi:
        off += TAU
    return off


_PENCIL_NEAR = 0.5  # a tangency approach shows a small secondary offset


def _touch_limit_join(plane: Plane, C: Circle, p: TorusPoint,
                      q: TorusPoint) -> List[Circle]:
    """Touching candidates as limits of joins: join p, q with a point of C
    sliding into p.

    For a small slide the joined circle agrees with the touching circle to
    within the slide distance.  The slide widens adaptively where the
    circle is chart-flat and the slid point degenerates against p or q.
    """
    theta_p = angle_of(p.x)
    out: List[Circle] = []
    for sign in (1.0, -1.0):
        for eps in (1e-7, 1e-6, 1e-5, 1e-4):
            xz = point_at_angle(theta_p + sign * eps)
            z = TorusPoint(xz, C.eval(xz))
            try:
                out.append(plane.join(p, q, z))
                break
            except (JoinFailure, ParallelInput):
                continue
    return out


def _pencil_reference(p: TorusPoint, q: TorusPoint) -> S1Point:
    """A reference vertical clear of the verticals through p and q."""
    theta_p = angle_of(p.x)
    theta_qx = angle_of(q.x)
    theta_ref = theta_p + TAU / 3.0
    if min(abs(_wrap_signed(theta_ref - theta_p)),
           abs(_wrap_signed(theta_ref - theta_qx))) < 0.1:
        theta_ref = theta_p + TAU / 3.0 + 0.7
    return point_at_angle(theta_ref)


def _pencil_make(plane: Plane, p: TorusPoint, q: TorusPoint,
                 x_ref: S1Point) -> Callable[[float], Optional[Circle]]:
    def make(w: float) -> Optional[Circle]:
        z = TorusPoint(x_ref, point_at_angle(w))
        try:
            return plane.join(p, q, z)
        except (JoinFailure, ParallelInput):
            return None

    return make


def _touch_seeded_pencil(plane: Plane, C: Circle, p: TorusPoint,
                         q: TorusPoint) -> List[Circle]:
    """Polish limit-join candidates to exact tangency within the pencil.

    A limit join sits within its slide distance of the touching member, so
    the tangency crossing of the secondary offset is bracketed by a short
    ladder around the candidate's own pencil coordinate.
    """
    theta_p = angle_of(p.x)
    x_ref = _pencil_reference(p, q)
    make = _pencil_make(plane, p, q, x_ref)
    refine = plane.tol.touch_refine

    out: List[Circle] = []
    for D0 in _touch_limit_join(plane, C, p, q):
        out.append(D0)
        w0 = angle_of(D0.eval(x_ref))
        g0 = _secondary_offset(C, D0, theta_p)
        if g0 == 0.0 or not math.isfinite(g0):
            continue
        polished = None
        for h in (1e-5, 1e-4, 1e-3, 1e-2):
            bracket = None
            for lo, hi in ((w0 - h, w0), (w0, w0 + h)):
                Dl, Dh = make(lo), make(hi)
                if Dl is None or Dh is None:
                    continue
                gl = _secondary_offset(C, Dl, theta_p)
                gh = _secondary_offset(C, Dh, theta_p)
                if not (math.isfinite(gl) and math.isfinite(gh)):
                    continue
                if gl == 0.0:
                    polished = Dl
                    break
                if gh == 0.0:
                    polished = Dh
                    break
                if gl * gh < 0.0 and abs(gh - gl) < math.pi:
                    bracket = (lo, hi, gl)
                    break
            if polished is not None or bracket is not None:
                break
        if polished is None and bracket is not None:
            lo, hi, gl = bracket
            sign_lo = gl > 0.0
            while hi - lo > refine:
                mid = 0.5 * (lo + hi)
                D = make(mid)
                if D is None:
                    break
                g = _secondary_offset(C, D, theta_p)
                if not math.isfinite(g):
                    break
                polished = D
                if g == 0.0:
                    break
                if (g > 0.0) == sign_lo:
                    lo = mid
                else:
                    hi = mid
        if polished is not None:
            out.insert(0, polished)
    return out


def _touch_pencil_joins(plane: Plane, C: Circle, p: TorusPoint, q: TorusPoint,
                        scan_offset: float) -> List[Circle]:
    """Scan the pencil of circles through p and q for members touching C at p.

    The pencil is parametrized by the member's height over a reference
    vertical: D(w) joins p, q and the reference point (x_ref, y(w)).  The
    offset of the nearest secondary C-intersection from p changes sign
    exactly where the pencil crosses a tangency at p; every crossing is
    refined and returned for verification.
    """
    tols = plane.tol
    theta_p = angle_of(p.x)
    x_ref = _pencil_reference(p, q)
    make = _pencil_make(plane, p, q, x_ref)

    n_seeds = tols.touch_seeds
    ws = (np.arange(n_seeds) + 0.5 + scan_offset) * (TAU / n_seeds)
    samples: List[Tuple[float, float]] = []
    found: List[Circle] = []
    for w in ws:
        D = make(float(w))
        if D is None:
            samples.append((float(w), math.nan))
            continue
        g = _secondary_offset(C, D, theta_p)
        if g == 0.0:
            found.append(D)
            samples.append((float(w), math.nan))
            continue
        samples.append((float(w), g))

    for i in range(len(samples)):
        w0, g0 = samples[i]
        w1, g1 = samples[(i + 1) % len(samples)]
        if not (math.isfinite(g0) and math.isfinite(g1)):
            continue
        if g0 * g1 >= 0.0 or abs(g1 - g0) >= math.pi:
            continue
        if min(abs(g0), abs(g1)) >= _PENCIL_NEAR:
            continue
        lo, hi = w0, w0 + (w1 - w0) % TAU
        sign_lo = g0 > 0.0
        best = None
        while hi - lo > tols.touch_refine:
            mid = 0.5 * (lo + hi)
            D = make(mid % TAU)
            if D is None:
                break
            g = _secondary_offset(C, D, theta_p)
            if not math.isfinite(g):
                break
            best = D
            if g == 0.0:
                break
            if (g > 0.0) == sign_lo:
                lo = mid
            else:
                hi = mid
        if best is not None:
            found.append(best)
    return found


# tripod convergence probe ----------------------------------------------------

@dataclass(frozen=True)
class SequenceSpec:
    """A point sequence converging in angle coordinates.

    The n-th point offsets the limit angles by (dx, dy) / n^power.
    """

    limit: TorusPoint
    dx: float
    dy: float
    power: float = 1.0

    def at(self, n: int) -> TorusPoint:
        tx, ty = self.limit.angles()
        scale = float(n) ** self.power
        return TorusPoint(point_at_angle(tx + self.dx / scale),
                          point_at_angle(ty + self.dy / scale))


@dataclass(frozen=True, eq=False)
class K4Report:
    """Distances of the projected sequence to its predicted limits."""

    n_max: int
    tol: float
    minus_distances: np.ndarray = field(repr=False)
    plus_distances: np.ndarray = field(repr=False)
    passed: bool = False

    @property
    def final_minus(self) -> float:
        return float(self.minus_distances[-1])

    @property
    def final_plus(self) -> float:
        return float(self.plus_distances[-1])


def _tail_nonincreasing(values: np.ndarray, start: int) -> bool:
    tail = values[start:]
    return bool(np.all(np.diff(tail) <= 1e-12 + 1e-6 * tail[:-1]))


def k4_probe(plane: Plane, tripod: Sequence[SequenceSpec], extra: SequenceSpec,
             n_max: int = 1000, tol: float = 1e-4,
             check_hypotheses: bool = True) -> K4Report:
    """Numeric coherence probe for joined circles along converging tripods.

    The three tripod sequences must converge to points p1, p2, p3 with p1
    and p2 sharing a vertical and p3 off it; the extra sequence converges
    to a point p nonparallel to all three.  The horizontal and vertical
    projections of the extra point onto the joined circles must then
    converge to the grid points (p1.x, p.y) and (p.x, p3.y).

    check_hypotheses=False runs the projections mechanically, for probing
    degenerate (for example constant) sequence data.
    """
    if len(tripod) != 3:
        raise SpecViolation("the tripod needs exactly three sequences")
    p1, p2, p3 = (spec.limit for spec in tripod)
    p = extra.limit
    if check_hypotheses:
        if parallel_relation(p1, p2) is not Parallel.PLUS:
            raise SpecViolation("the first two limits must be plus-parallel")
        if s1_close(p3.x, p1.x):
            raise SpecViolation("the third limit must avoid the shared vertical")
        for i, limit in enumerate((p1, p2, p3), start=1):
            if parallel_relation(p, limit) is not Parallel.NONE:
                raise SpecViolation(f"the extra limit is parallel to tripod limit {i}")

    predicted_minus = pi_parallel_intersection(p1, p)
    predicted_plus = pi_parallel_intersection(p, p3)

    minus = np.empty(n_max)
    plus = np.empty(n_max)
    for n in range(1, n_max + 1):
        pts = [spec.at(n) for spec in tripod]
        if not (nonparallel(pts[0], pts[1]) and nonparallel(pts[0], pts[2])
                and nonparallel(pts[1], pts[2])):
            raise SpecViolation(f"tripod points are parallel at n = {n}")
        Cn = alpha_join(plane, *pts)
        pn = extra.at(n)
        minus[n - 1] = metric_e(pi_minus_projection(pn, Cn), predicted_minus)
        plus[n - 1] = metric_e(pi_plus_projection(pn, Cn), predicted_plus)

    start = max(0, n_max // 10)
    passed = (minus[-1] <= tol and plus[-1] <= tol
              and _tail_nonincreasing(minus, start)
              and _tail_nonincreasing(plus, start))
    return K4Report(n_max=n_max, tol=tol, minus_distances=minus,
                    plus_distances=plus, passed=passed)
