"""Randomized axiom and structure suites with reproducible reports.

Each suite samples its inputs uniformly in angle coordinates from a seeded
generator, records failures as data (never raises for a geometric
failure), and produces a report that is bit-reproducible from its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .circle_geometry import (
    INF,
    Parallel,
    S1Point,
    TAU,
    TorusPoint,
    angle_of,
    metric_e,
    pairwise_nonparallel,
    parallel_relation,
    point_at_angle,
)
from .errors import (
    DegenerateInput,
    EqualCircles,
    GeometryError,
    InvalidTrials,
    JoinFailure,
    NoTouchingCircle,
    TooManyIntersections,
)
from .planes import Circle, Plane, circle_equal, membership_residual, sample_circle

_RESAMPLE_CAP = 100


@dataclass
class VerificationReport:
    """Outcome of one randomized suite."""

    suite: str
    trials: int
    failures: List[dict]
    max_residual: float
    verdict: str
    seed: int
    skipped: int = 0
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "name": self.suite,
            "trials": self.trials,
            "failures": self.failures,
            "max_residual": self.max_residual,
            "verdict": self.verdict,
            "seed": self.seed,
            "skipped": self.skipped,
            "detail": self.detail,
        }

    def to_text(self) -> str:
        lines = [
            f"suite = {self.suite}",
            f"trials = {self.trials}",
            f"skipped = {self.skipped}",
            f"failures = {len(self.failures)}",
            f"max_residual = {self.max_residual:.17g}",
            f"verdict = {self.verdict}",
            f"seed = {self.seed}",
        ]
        if self.detail:
            lines.insert(1, f"detail = {self.detail}")
        for failure in self.failures[:20]:
            lines.append("failure: " + ", ".join(f"{k}={v}" for k, v in failure.items()))
        return "\n".join(lines)


def random_point(rng: np.random.Generator) -> TorusPoint:
    return TorusPoint(point_at_angle(rng.uniform(0.0, TAU)),
                      point_at_angle(rng.uniform(0.0, TAU)))


def random_nonparallel_triple(rng: np.random.Generator):
    for _ in range(_RESAMPLE_CAP):
        pts = [random_point(rng) for _ in range(3)]
        if pairwise_nonparallel(pts):
            return pts
    raise DegenerateInput("resample cap exceeded while drawing a triple")


def random_distinct_xs(rng: np.random.Generator, count: int,
                       separation: float = 0.15,
                       avoid: Optional[List[float]] = None,
                       clearance: float = 0.05) -> List[S1Point]:
    """First coordinates with pairwise angle separation, for conditioning.

    `avoid` lists angles (circle poles, say) every draw must clear: both
    the fit and the sampled data degrade there.
    """
    for _ in range(_RESAMPLE_CAP):
        thetas = np.sort(rng.uniform(0.0, TAU, size=count))
        gaps = np.diff(np.concatenate([thetas, [thetas[0] + TAU]]))
        if np.min(gaps) < separation:
            continue
        if avoid:
            deltas = np.abs((thetas[:, None] - np.array(avoid)[None, :] + math.pi)
                            % TAU - math.pi)
            if np.min(deltas) < clearance:
                continue
        return [point_at_angle(float(t)) for t in thetas]
    raise DegenerateInput("resample cap exceeded while drawing x coordinates")


def random_circle(plane: Plane, rng: np.random.Generator) -> Circle:
    for _ in range(_RESAMPLE_CAP):
        pts = random_nonparallel_triple(rng)
        try:
            return plane.join(*pts)
        except JoinFailure:
            continue
    raise JoinFailure("resample cap exceeded while drawing a circle")


def verify_joining(plane: Plane, trials: int = 1000, seed: int = 42,
                   residual_tol: float = None) -> VerificationReport:
    """Probe the joining axiom: membership residuals plus re-join uniqueness."""
    if trials < 1:
        raise InvalidTrials("at least one trial is required")
    tol = residual_tol if residual_tol is not None else 1e-7
    rng = np.random.default_rng(seed)
    failures = []
    max_residual = 0.0
    skipped = 0
    for index in range(trials):
        pts = random_nonparallel_triple(rng)
        try:
            C = plane.join(*pts)
        except JoinFailure as exc:
            failures.append({"trial": index, "error": "JoinFailure",
                             "detail": str(exc)})
            continue
        residual = max(membership_residual(C, p) for p in pts)
        max_residual = max(max_residual, residual)
        if residual > tol:
            failures.append({"trial": index, "residual": residual})
            continue
        # uniqueness: a rejoin from fresh points of C must give C back.
        # Corner-shaped circles are nearly flat away from their pole, so
        # the probe straddles the pole, where the curve determines its
        # parameters, instead of sampling blindly.
        pole = angle_of(C.inv_eval(INF))
        jitter = rng.uniform(-0.1, 0.1, size=3)
        angles = (pole + 0.35 + jitter[0], pole - 0.35 + jitter[1],
                  pole + math.pi + jitter[2])
        fresh = []
        for angle in angles:
            x = point_at_angle(angle % TAU)
            fresh.append(TorusPoint(x, C.eval(x)))
        if not pairwise_nonparallel(fresh):
            skipped += 1
            continue
        try:
            D = plane.join(*fresh)
        except JoinFailure as exc:
            failures.append({"trial": index, "error": "JoinFailure(rejoin)",
                             "detail": str(exc)})
            continue
        if not circle_equal(C, D, plane):
            failures.append({"trial": index, "error": "rejoin mismatch",
                             "circle": C.describe(), "rejoined": D.describe()})
    return VerificationReport(
        suite="joining", trials=trials, failures=failures,
        max_residual=max_residual,
        verdict="pass" if not failures else "fail",
        seed=seed, skipped=skipped, detail=plane.describe(),
    )


def verify_two_point_bound(plane: Plane, trials: int = 1000,
                           seed: int = 42) -> VerificationReport:
    """Distinct circles may share at most two points."""
    from .operations import gamma_intersect

    if trials < 1:
        raise InvalidTrials("at least one trial is required")
    rng = np.random.default_rng(seed)
    failures = []
    skipped = 0
    for index in range(trials):
        C = random_circle(plane, rng)
        D = random_circle(plane, rng)
        try:
            gamma_intersect(C, D, plane=plane)
        except EqualCircles:
            skipped += 1
        except TooManyIntersections as exc:
            failures.append({
                "trial": index,
                "points": len(exc.points),
                "first": C.describe(),
                "second": D.describe(),
            })
    return VerificationReport(
        suite="two_point_bound", trials=trials, failures=failures,
        max_residual=0.0,
        verdict="pass" if not failures else "fail",
        seed=seed, skipped=skipped, detail=plane.describe(),
    )


def verify_touching(plane: Plane, trials: int = 500, seed: int = 42,
                    agreement_tol: float = 1e-6,
                    uniqueness_seeds: int = 8) -> VerificationReport:
    """Probe the touching axiom: existence plus multi-seed agreement."""
    from .operations import touching_solver

    if trials < 1:
        raise InvalidTrials("at least one trial is required")
    rng = np.random.default_rng(seed)
    failures = []
    max_residual = 0.0
    skipped = 0
    for index in range(trials):
        C = random_circle(plane, rng)
        x = point_at_angle(rng.uniform(0.0, TAU))
        p = TorusPoint(x, C.eval(x))
        q = None
        for _ in range(_RESAMPLE_CAP):
            cand = random_point(rng)
            if parallel_relation(p, cand) is not Parallel.NONE:
                continue
            if membership_residual(C, cand) <= 1e-9:
                skipped += 1
                continue
            q = cand
            break
        if q is None:
            skipped += 1
            continue
        try:
            D = touching_solver(plane, C, p, q)
        except (NoTouchingCircle, GeometryError) as exc:
            failures.append({"trial": index, "error": type(exc).__name__,
                             "circle": C.describe()})
            continue
        residual = max(membership_residual(D, p), membership_residual(D, q))
        max_residual = max(max_residual, residual)
        agreed = True
        for offset_index in range(1, uniqueness_seeds):
            offset = offset_index / uniqueness_seeds
            try:
                other = touching_solver(plane, C, p, q, scan_offset=offset)
            except (NoTouchingCircle, GeometryError):
                agreed = False
                break
            if not circle_equal(D, other, plane, tol=agreement_tol):
                agreed = False
                break
        if not agreed:
            failures.append({"trial": index, "error": "seed disagreement",
                             "circle": C.describe()})
    return VerificationReport(
        suite="touching", trials=trials, failures=failures,
        max_residual=max_residual,
        verdict="pass" if not failures else "fail",
        seed=seed, skipped=skipped, detail=plane.describe(),
    )


_RIGIDITY_MOVE = 1e-9


def verify_rigidity(plane: Plane, trials: int = 500,
                    seed: int = 42) -> VerificationReport:
    """Nonidentity family members must move some point of any triple."""
    from .automorphisms import apply_map, random_family_member

    if trials < 1:
        raise InvalidTrials("at least one trial is required")
    rng = np.random.default_rng(seed)
    failures = []
    max_move = 0.0
    for index in range(trials):
        sigma = random_family_member(plane, rng)
        pts = random_nonparallel_triple(rng)
        move = max(metric_e(apply_map(sigma, p), p) for p in pts)
        max_move = max(max_move, move)
        if move < _RIGIDITY_MOVE:
            failures.append({"trial": index, "move": move,
                             "map": sigma.describe()})
    return VerificationReport(
        suite="rigidity", trials=trials, failures=failures,
        max_residual=max_move,
        verdict="pass" if not failures else "fail",
        seed=seed, detail=plane.describe(),
    )
