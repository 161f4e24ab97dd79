"""Derived planes: lines, collinearity, betweenness, and dense closures.

Puncturing the torus at a base point leaves a plane whose lines are the
parallel classes missing the base point plus the circles through it.
Lines are ordered by the varying coordinate's circle angle, punctured at
the base point's coordinate, which makes each line order-isomorphic to
the reals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from .circle_geometry import (
    CHART_TOL,
    INF,
    Parallel,
    S1Point,
    TAU,
    TorusPoint,
    angle_of,
    chart_distance,
    parallel_relation,
    point_at_angle,
    s1_close,
)
from .errors import (
    DegenerateInput,
    EqualCircles,
    InfiniteCoordinate,
    JoinFailure,
    NotCollinear,
    OutsideDerivedPlane,
    ParallelInput,
    RegionOutsideDerivedPlane,
    TooManyIntersections,
)
from .operations import alpha_join, gamma_intersect, pi_parallel_intersection
from .planes import (
    Circle,
    HartLine,
    MoebiusGraph,
    Plane,
    membership_residual,
    underlying_moebius,
)


@dataclass(frozen=True)
class DerivedLine:
    """A line of the plane derived at a base point.

    kind is "plus" (a vertical avoiding the base point), "minus" (a
    horizontal), or "circle" (a circle through the base point).
    """

    kind: str
    base: TorusPoint
    coordinate: Optional[S1Point] = None
    circle: Optional[Circle] = None

    def contains(self, p: TorusPoint, tol: float = 1e-7) -> bool:
        if self.kind == "plus":
            return s1_close(p.x, self.coordinate, tol)
        if self.kind == "minus":
            return s1_close(p.y, self.coordinate, tol)
        return membership_residual(self.circle, p) <= tol

    def position(self, p: TorusPoint) -> float:
        """Order coordinate of a point of the line (homeomorphic to R).

        The varying coordinate's angle, punctured at the matching base
        coordinate.
        """
        if self.kind == "plus":
            puncture = angle_of(self.base.y)
            return (angle_of(p.y) - puncture) % TAU
        if self.kind == "minus":
            puncture = angle_of(self.base.x)
            return (angle_of(p.x) - puncture) % TAU
        puncture = angle_of(self.base.x)
        return (angle_of(p.x) - puncture) % TAU


def _check_in_derived_plane(p: TorusPoint, base: TorusPoint) -> None:
    if parallel_relation(p, base) is not Parallel.NONE:
        raise OutsideDerivedPlane(f"{p!r} is parallel to the base point")


def derived_line(plane: Plane, p: TorusPoint, a: TorusPoint,
                 b: TorusPoint) -> DerivedLine:
    """The derived-plane line through two of its points."""
    for point in (a, b):
        _check_in_derived_plane(point, p)
    relation = parallel_relation(a, b)
    if relation is Parallel.EQUAL:
        raise DegenerateInput("a line needs two distinct points")
    if relation is Parallel.PLUS:
        return DerivedLine("plus", p, coordinate=a.x)
    if relation is Parallel.MINUS:
        return DerivedLine("minus", p, coordinate=a.y)
    return DerivedLine("circle", p, circle=alpha_join(plane, p, a, b))


def collinear(plane: Plane, p: TorusPoint, a: TorusPoint, b: TorusPoint,
              c: TorusPoint, tol: float = 1e-7) -> bool:
    """Whether c lies on the derived line through a and b."""
    _check_in_derived_plane(c, p)
    line = derived_line(plane, p, a, b)
    return line.contains(c, tol)


def between(plane: Plane, p: TorusPoint, a: TorusPoint, b: TorusPoint,
            c: TorusPoint, tol: float = 1e-7) -> bool:
    """Whether b lies strictly inside the line interval from a to c."""
    pts = (a, b, c)
    for i in range(3):
        for j in range(i + 1, 3):
            if (s1_close(pts[i].x, pts[j].x, CHART_TOL)
                    and s1_close(pts[i].y, pts[j].y, CHART_TOL)):
                raise DegenerateInput("betweenness needs distinct points")
    line = derived_line(plane, p, a, c)
    if not line.contains(b, tol):
        raise NotCollinear("the middle point is off the line")
    ta, tb, tc = line.position(a), line.position(b), line.position(c)
    lo, hi = min(ta, tc), max(ta, tc)
    return lo < tb < hi


def metric_d(a: TorusPoint, b: TorusPoint) -> float:
    """Maximum-coordinate distance for finite points."""
    for point in (a, b):
        if point.x.is_inf or point.y.is_inf:
            raise InfiniteCoordinate("the maximum metric needs finite coordinates")
    return max(abs(a.x.value - b.x.value), abs(a.y.value - b.y.value))


# dense closure ----------------------------------------------------------------

_DEDUP_TOL = 1e-9
_LEVEL_CAP = 10_000
_TOTAL_CAP = 100_000
_GRID_SIDE = 64
_MAX_LINES_PER_LEVEL = 220
_MAX_MEET_PAIRS = 30_000
_GRID_COORD_CAP = 100
_PROJECTION_CAP = 1500


@dataclass
class DenseResult:
    """Outcome of the breadth-limited closure."""

    points: np.ndarray
    covering_radius: float
    level_radii: List[float]


def _region_distance(pts: np.ndarray, region: Tuple[float, float, float, float]) -> np.ndarray:
    xmin, xmax, ymin, ymax = region
    dx = np.maximum(np.maximum(xmin - pts[:, 0], pts[:, 0] - xmax), 0.0)
    dy = np.maximum(np.maximum(ymin - pts[:, 1], pts[:, 1] - ymax), 0.0)
    return np.maximum(dx, dy)


class _CellIndex:
    """Constant-time maximum-metric dedupe on a quantized grid."""

    def __init__(self, tol: float):
        self.tol = tol
        self.cells = {}

    def _cell(self, x: float, y: float):
        return (int(round(x / self.tol)), int(round(y / self.tol)))

    def near(self, x: float, y: float) -> bool:
        cx, cy = self._cell(x, y)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for ox, oy in self.cells.get((cx + dx, cy + dy), ()):
                    if max(abs(ox - x), abs(oy - y)) <= self.tol:
                        return True
        return False

    def add(self, x: float, y: float) -> None:
        self.cells.setdefault(self._cell(x, y), []).append((x, y))


def _covering_radius(pts: np.ndarray, region) -> float:
    xmin, xmax, ymin, ymax = region
    gx = np.linspace(xmin, xmax, _GRID_SIDE)
    gy = np.linspace(ymin, ymax, _GRID_SIDE)
    grid = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1).reshape(-1, 2)
    tree = cKDTree(pts)
    dists, _ = tree.query(grid, k=1, p=np.inf)
    return float(np.max(dists))


def _finite_xy(p: TorusPoint) -> Optional[Tuple[float, float]]:
    if p.x.is_inf or p.y.is_inf:
        return None
    return (p.x.value, p.y.value)


def _meet_lines(plane: Plane, l1: DerivedLine, l2: DerivedLine) -> List[TorusPoint]:
    """Finite meets of two derived lines, the base point excluded."""
    kinds = (l1.kind, l2.kind)
    if kinds == ("plus", "minus"):
        return [TorusPoint(l1.coordinate, l2.coordinate)]
    if kinds == ("minus", "plus"):
        return [TorusPoint(l2.coordinate, l1.coordinate)]
    if kinds in (("plus", "plus"), ("minus", "minus")):
        return []
    if "plus" in kinds:
        vert, circ = (l1, l2) if l1.kind == "plus" else (l2, l1)
        return [TorusPoint(vert.coordinate, circ.circle.eval(vert.coordinate))]
    if "minus" in kinds:
        horiz, circ = (l1, l2) if l1.kind == "minus" else (l2, l1)
        return [TorusPoint(circ.circle.inv_eval(horiz.coordinate), horiz.coordinate)]
    meets = _meet_circles(plane, l1.circle, l2.circle)
    base = l1.base
    out = []
    for pt in meets:
        if parallel_relation(pt, base) is Parallel.NONE:
            out.append(pt)
    return out


def _meet_circles(plane: Plane, C: Circle, D: Circle) -> List[TorusPoint]:
    """Intersection points, with a closed form for projective graph pairs."""
    m1 = underlying_moebius(C)
    m2 = underlying_moebius(D)
    if m1 is not None and m2 is not None:
        alpha = m1.a * m2.c - m2.a * m1.c
        beta = m1.a * m2.d - m2.a * m1.d + m1.b * m2.c - m2.b * m1.c
        gamma = m1.b * m2.d - m2.b * m1.d
        roots: List[S1Point] = []
        if alpha == 0.0:
            if beta != 0.0:
                roots.append(S1Point(-gamma / beta))
                roots.append(INF)
        else:
            disc = beta * beta - 4.0 * alpha * gamma
            if disc == 0.0:
                roots.append(S1Point(-beta / (2.0 * alpha)))
            elif disc > 0.0:
                sq = math.sqrt(disc)
                q = -0.5 * (beta + math.copysign(sq, beta))
                roots.append(S1Point(q / alpha))
                if q != 0.0:
                    roots.append(S1Point(gamma / q))
        return [TorusPoint(x, C.eval(x)) for x in roots]
    if isinstance(C, HartLine) and isinstance(D, HartLine):
        if C.slope == D.slope:
            return [TorusPoint(INF, INF)]
        x = (D.intercept - C.intercept) / (C.slope - D.slope)
        return [TorusPoint(S1Point(x), C.eval(S1Point(x))), TorusPoint(INF, INF)]
    try:
        return list(gamma_intersect(C, D, plane=plane).points)
    except (EqualCircles, TooManyIntersections):
        return []


def generate_dense(plane: Plane, p: TorusPoint, d2: TorusPoint, d3: TorusPoint,
                   depth: int, region: Tuple[float, float, float, float]) -> DenseResult:
    """Breadth-limited closure of two seed points under the derived-plane
    operations: line meets, parallel intersections, and projections.

    The covering radius tracks the worst maximum-metric gap between the
    generated set and a uniform grid on the region.
    """
    if depth < 0 or depth > 6:
        raise DegenerateInput("the closure depth must lie in 0..6")
    xmin, xmax, ymin, ymax = region
    if xmin > xmax or ymin > ymax:
        raise RegionOutsideDerivedPlane("empty region")
    if not p.x.is_inf and xmin <= p.x.value <= xmax:
        raise RegionOutsideDerivedPlane("the region crosses the base vertical")
    if not p.y.is_inf and ymin <= p.y.value <= ymax:
        raise RegionOutsideDerivedPlane("the region crosses the base horizontal")
    for seed in (d2, d3):
        _check_in_derived_plane(seed, p)
    if parallel_relation(d2, d3) is not Parallel.NONE:
        raise ParallelInput("the seeds must be nonparallel")

    seeds = [d2, d3, pi_parallel_intersection(d2, d3), pi_parallel_intersection(d3, d2)]
    coords: List[Tuple[float, float]] = []
    index = _CellIndex(_DEDUP_TOL)
    for pt in seeds:
        xy = _finite_xy(pt)
        if xy is not None and not index.near(*xy):
            coords.append(xy)
            index.add(*xy)
    points = np.array(coords, dtype=float)

    radii = [_covering_radius(points, region)]
    lines: List[DerivedLine] = []
    line_keys = set()
    frontier_start = 0

    for level in range(depth):
        n = len(points)
        # lines through point pairs; a seeded draw keeps the pair selection
        # diverse once the set grows past exhaustive reach, and the fixed
        # seed keeps the whole closure deterministic
        pair_rng = np.random.default_rng(level + 1)
        if n * (n - 1) // 2 <= 2 * _MAX_LINES_PER_LEVEL:
            pair_list = [(i, j) for i in range(n) for j in range(i)]
        else:
            draws = pair_rng.integers(0, n, size=(4 * _MAX_LINES_PER_LEVEL, 2))
            pair_list = [(int(i), int(j)) for i, j in draws if i != j]
        new_lines: List[DerivedLine] = []
        budget = _MAX_LINES_PER_LEVEL
        for i, j in pair_list:
            if budget <= 0:
                break
            a = TorusPoint(S1Point(points[i, 0]), S1Point(points[i, 1]))
            b = TorusPoint(S1Point(points[j, 0]), S1Point(points[j, 1]))
            if parallel_relation(a, p) is not Parallel.NONE:
                continue
            if parallel_relation(b, p) is not Parallel.NONE:
                continue
            rel = parallel_relation(a, b)
            if rel is Parallel.EQUAL:
                continue
            try:
                line = derived_line(plane, p, a, b)
            except (JoinFailure, OutsideDerivedPlane, DegenerateInput):
                continue
            if line.kind == "circle":
                key = ("circle", line.circle.describe())
            else:
                key = (line.kind, round(angle_of(line.coordinate) / _DEDUP_TOL))
            if key in line_keys:
                continue
            line_keys.add(key)
            new_lines.append(line)
            budget -= 1

        blocks: List[np.ndarray] = []

        # meets of new lines with all known lines
        meet_rows: List[Tuple[float, float]] = []
        pair_budget = _MAX_MEET_PAIRS
        for line in new_lines:
            if pair_budget <= 0:
                break
            for other in lines + new_lines:
                if pair_budget <= 0:
                    break
                if other is line:
                    continue
                pair_budget -= 1
                for pt in _meet_lines(plane, line, other):
                    xy = _finite_xy(pt)
                    if xy is not None:
                        meet_rows.append(xy)
        if meet_rows:
            blocks.append(np.array(meet_rows, dtype=float))

        # projections of a region-local point sample onto the new circle lines
        local = points[_region_distance(points, region) <= 1.0]
        if len(local) > _PROJECTION_CAP:
            local = local[pair_rng.permutation(len(local))[:_PROJECTION_CAP]]
        for line in new_lines:
            if line.kind != "circle":
                continue
            with np.errstate(all="ignore"):
                proj_y = line.circle.eval_enc(local[:, 0])
                proj_x = line.circle.inv_eval_enc(local[:, 1])
            blocks.append(np.column_stack([local[:, 0], proj_y]))
            blocks.append(np.column_stack([proj_x, local[:, 1]]))

        # parallel intersections: the coordinate grid of everything seen so
        # far this level, restricted to coordinates near the region
        xmid = 0.5 * (xmin + xmax)
        ymid = 0.5 * (ymin + ymax)
        span = max(xmax - xmin, ymax - ymin, 1.0)
        seen = np.vstack([points] + blocks) if blocks else points
        with np.errstate(all="ignore"):
            xs = np.unique(np.round(seen[:, 0] / _DEDUP_TOL) * _DEDUP_TOL)
            ys = np.unique(np.round(seen[:, 1] / _DEDUP_TOL) * _DEDUP_TOL)
        xs = xs[np.isfinite(xs) & (np.abs(xs - xmid) <= 2.0 * span)]
        ys = ys[np.isfinite(ys) & (np.abs(ys - ymid) <= 2.0 * span)]
        xs = xs[np.argsort(np.abs(xs - xmid), kind="stable")][:_GRID_COORD_CAP]
        ys = ys[np.argsort(np.abs(ys - ymid), kind="stable")][:_GRID_COORD_CAP]
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        blocks.append(np.column_stack([gx.ravel(), gy.ravel()]))

        lines.extend(new_lines)
        frontier_start = n

        if not blocks:
            radii.append(radii[-1])
            continue
        cand = np.vstack(blocks)
        cand = cand[np.all(np.isfinite(cand), axis=1)]
        if len(cand) == 0:
            radii.append(radii[-1])
            continue

        # nearest-first retention toward the region; ties are spread by a
        # seeded shuffle instead of clustering lexicographically
        cand = cand[np.lexsort((cand[:, 1], cand[:, 0]))]
        cand = cand[pair_rng.permutation(len(cand))]
        cand = cand[np.argsort(_region_distance(cand, region), kind="stable")]
        keep: List[np.ndarray] = []
        for row in cand:
            if len(keep) >= _LEVEL_CAP or n + len(keep) >= _TOTAL_CAP:
                break
            x, y = float(row[0]), float(row[1])
            if index.near(x, y):
                continue
            keep.append(row)
            index.add(x, y)
        if keep:
            points = np.vstack([points, np.array(keep)])
        radii.append(_covering_radius(points, region))

    return DenseResult(points=points, covering_radius=radii[-1], level_radii=radii)
