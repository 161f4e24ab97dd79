"""Plane families, circle descriptors, and joining solvers.

Three families are implemented: the classical plane, swapping half planes
built from a pair of orientation-preserving circle homeomorphisms (f, g),
and generalized Hartmann planes built from two semi-multiplicative
parameter pairs.  Circles carry symbolic descriptors; sampling is derived
on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .circle_geometry import (
    CHART_TOL,
    INF,
    S1Point,
    SampledCircle,
    TAU,
    TorusPoint,
    chart_distance,
    enc_from_angle,
    hausdorff_h,
    pairwise_nonparallel,
    s1,
    s1_close,
)
from .errors import DegenerateInput, InvalidParameter, JoinFailure, ParallelInput
from .moebius import MoebiusMap, mobius_from_three_pairs


# semi-multiplicative homeomorphisms ----------------------------------------

def _semi_f(r: float, s: float, u: float) -> float:
    """Raw piecewise power map on finite floats: u^r for u >= 0, -s|u|^r else."""
    try:
        if u >= 0.0:
            return u ** r
        return -s * (-u) ** r
    except OverflowError:
        return math.inf if u >= 0.0 else -math.inf


def _semi_f_inv(r: float, s: float, v: float) -> float:
    try:
        if v >= 0.0:
            return v ** (1.0 / r)
        return -((-v) / s) ** (1.0 / r)
    except OverflowError:
        return math.inf if v >= 0.0 else -math.inf


def semi_mult_eval(r: float, s: float, x) -> S1Point:
    """Evaluate the semi-multiplicative map: x^r for x >= 0, -s|x|^r for x < 0."""
    if r <= 0.0 or s <= 0.0:
        raise InvalidParameter("semi-multiplicative parameters must be positive")
    x = s1(x)
    if x.is_inf:
        return INF
    out = _semi_f(r, s, x.value)
    return INF if math.isinf(out) else S1Point(out)


def semi_mult_inverse(r: float, s: float, y) -> S1Point:
    if r <= 0.0 or s <= 0.0:
        raise InvalidParameter("semi-multiplicative parameters must be positive")
    y = s1(y)
    if y.is_inf:
        return INF
    out = _semi_f_inv(r, s, y.value)
    return INF if math.isinf(out) else S1Point(out)


def _semi_enc(r: float, s: float, xs: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return np.where(xs >= 0.0, xs ** r, -s * np.abs(xs) ** r)


def _semi_inv_enc(r: float, s: float, ys: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return np.where(ys >= 0.0, ys ** (1.0 / r), -(np.abs(ys) / s) ** (1.0 / r))


# circle homeomorphisms from a fixed descriptor set --------------------------

class Homeo:
    """A homeomorphism of the circle from a small closed descriptor set.

    identity, affine (x -> rx + t with r > 0), semi-multiplicative, and
    projective descriptors, plus finite composites.  All but the projective
    kind are orientation-preserving and fix infinity.
    """

    IDENTITY = "identity"
    AFFINE = "affine"
    SEMI_MULT = "semi_mult"
    MOEBIUS = "moebius"
    COMPOSITE = "composite"

    __slots__ = ("kind", "params")

    def __init__(self, kind: str, params: tuple):
        self.kind = kind
        self.params = params

    @classmethod
    def identity(cls) -> "Homeo":
        return cls(cls.IDENTITY, ())

    @classmethod
    def affine(cls, r: float, t: float = 0.0) -> "Homeo":
        if not (r > 0.0):
            raise InvalidParameter("affine descriptor needs a positive scale")
        return cls(cls.AFFINE, (float(r), float(t)))

    @classmethod
    def semi_mult(cls, r: float, s: float) -> "Homeo":
        if not (r > 0.0 and s > 0.0):
            raise InvalidParameter("semi_mult descriptor needs positive parameters")
        return cls(cls.SEMI_MULT, (float(r), float(s)))

    @classmethod
    def moebius(cls, m: MoebiusMap) -> "Homeo":
        return cls(cls.MOEBIUS, (m, m.inverse()))

    @classmethod
    def composite(cls, parts: Sequence["Homeo"]) -> "Homeo":
        flat: List[Homeo] = []
        for part in parts:
            if part.kind == cls.COMPOSITE:
                flat.extend(part.params)
            elif part.kind != cls.IDENTITY:
                flat.append(part)
        if not flat:
            return cls.identity()
        if len(flat) == 1:
            return flat[0]
        return cls(cls.COMPOSITE, tuple(flat))

    # evaluation; composites apply right to left

    def forward(self, x) -> S1Point:
        x = s1(x)
        if self.kind == self.IDENTITY:
            return x
        if self.kind == self.AFFINE:
            r, t = self.params
            if x.is_inf:
                return INF
            return S1Point(r * x.value + t)
        if self.kind == self.SEMI_MULT:
            r, s = self.params
            return semi_mult_eval(r, s, x)
        if self.kind == self.MOEBIUS:
            return self.params[0].apply(x)
        out = x
        for part in reversed(self.params):
            out = part.forward(out)
        return out

    def inverse(self, y) -> S1Point:
        y = s1(y)
        if self.kind == self.IDENTITY:
            return y
        if self.kind == self.AFFINE:
            r, t = self.params
            if y.is_inf:
                return INF
            return S1Point((y.value - t) / r)
        if self.kind == self.SEMI_MULT:
            r, s = self.params
            return semi_mult_inverse(r, s, y)
        if self.kind == self.MOEBIUS:
            return self.params[1].apply(y)
        out = y
        for part in self.params:
            out = part.inverse(out)
        return out

    def forward_enc(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.kind == self.IDENTITY:
            return xs
        if self.kind == self.AFFINE:
            r, t = self.params
            with np.errstate(all="ignore"):
                return r * xs + t
        if self.kind == self.SEMI_MULT:
            r, s = self.params
            return _semi_enc(r, s, xs)
        if self.kind == self.MOEBIUS:
            return self.params[0].apply_enc(xs)
        out = xs
        for part in reversed(self.params):
            out = part.forward_enc(out)
        return out

    def inverse_enc(self, ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        if self.kind == self.IDENTITY:
            return ys
        if self.kind == self.AFFINE:
            r, t = self.params
            with np.errstate(all="ignore"):
                return (ys - t) / r
        if self.kind == self.SEMI_MULT:
            r, s = self.params
            return _semi_inv_enc(r, s, ys)
        if self.kind == self.MOEBIUS:
            return self.params[1].apply_enc(ys)
        out = ys
        for part in self.params:
            out = part.inverse_enc(out)
        return out

    def compose(self, other: "Homeo") -> "Homeo":
        """self after other; affine and projective pairs stay in-family."""
        if self.kind == self.IDENTITY:
            return other
        if other.kind == self.IDENTITY:
            return self
        if self.kind == self.AFFINE and other.kind == self.AFFINE:
            r1, t1 = self.params
            r2, t2 = other.params
            return Homeo.affine(r1 * r2, r1 * t2 + t1)
        if self.kind == self.MOEBIUS and other.kind == self.MOEBIUS:
            return Homeo.moebius(self.params[0].compose(other.params[0]))
        return Homeo.composite([self, other])

    def inverted(self) -> "Homeo":
        if self.kind == self.IDENTITY:
            return self
        if self.kind == self.AFFINE:
            r, t = self.params
            return Homeo.affine(1.0 / r, -t / r)
        if self.kind == self.SEMI_MULT:
            r, s = self.params
            return Homeo.semi_mult(1.0 / r, s ** (-1.0 / r))
        if self.kind == self.MOEBIUS:
            return Homeo.moebius(self.params[1])
        return Homeo.composite([part.inverted() for part in reversed(self.params)])

    @property
    def orientation_preserving(self) -> bool:
        if self.kind == self.MOEBIUS:
            return self.params[0].det_sign > 0
        if self.kind == self.COMPOSITE:
            flips = sum(1 for part in self.params if not part.orientation_preserving)
            return flips % 2 == 0
        return True

    def describe(self) -> str:
        if self.kind == self.IDENTITY:
            return "id"
        if self.kind == self.AFFINE:
            return f"affine({self.params[0]:g},{self.params[1]:g})"
        if self.kind == self.SEMI_MULT:
            return f"semi_mult({self.params[0]:g},{self.params[1]:g})"
        if self.kind == self.MOEBIUS:
            m = self.params[0]
            return f"moebius({m.a:g},{m.b:g},{m.c:g},{m.d:g})"
        return "*".join(part.describe() for part in self.params)

    def __repr__(self) -> str:
        return f"Homeo<{self.describe()}>"


# circle descriptors ---------------------------------------------------------

class Branch(Enum):
    POS = "pos"
    NEG = "neg"


class Circle:
    """Graph of a circle homeomorphism, evaluated symbolically."""

    @property
    def orientation(self) -> int:
        """+1 when the graph map preserves the circle orientation."""
        raise NotImplementedError

    def eval(self, x) -> S1Point:
        raise NotImplementedError

    def inv_eval(self, y) -> S1Point:
        raise NotImplementedError

    def eval_enc(self, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inv_eval_enc(self, ys: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def special_points(self) -> List[TorusPoint]:
        """The points of the graph with an infinite coordinate."""
        at_inf = TorusPoint(INF, self.eval(INF))
        if at_inf.y.is_inf:
            return [at_inf]
        return [at_inf, TorusPoint(self.inv_eval(INF), INF)]

    def describe(self) -> str:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}<{self.describe()}>"


@dataclass(frozen=True, repr=False)
class MoebiusGraph(Circle):
    map: MoebiusMap

    @property
    def orientation(self) -> int:
        return self.map.det_sign

    def eval(self, x) -> S1Point:
        return self.map.apply(x)

    def inv_eval(self, y) -> S1Point:
        return self.map.inverse().apply(y)

    def eval_enc(self, xs):
        return self.map.apply_enc(xs)

    def inv_eval_enc(self, ys):
        return self.map.inverse().apply_enc(ys)

    def describe(self) -> str:
        m = self.map
        return f"moebius:{m.a:.17g},{m.b:.17g},{m.c:.17g},{m.d:.17g}"


@dataclass(frozen=True, repr=False)
class SwappedGraph(Circle):
    """Graph of g^-1 . h . f with h in the orientation-reversing half."""

    g: Homeo
    h: MoebiusMap
    f: Homeo

    def __post_init__(self):
        if self.h.det_sign != -1:
            raise InvalidParameter("swapped graphs need an orientation-reversing core")

    @property
    def orientation(self) -> int:
        sign = self.h.det_sign
        if not self.f.orientation_preserving:
            sign = -sign
        if not self.g.orientation_preserving:
            sign = -sign
        return sign

    def eval(self, x) -> S1Point:
        return self.g.inverse(self.h.apply(self.f.forward(x)))

    def inv_eval(self, y) -> S1Point:
        return self.f.inverse(self.h.inverse().apply(self.g.forward(y)))

    def eval_enc(self, xs):
        return self.g.inverse_enc(self.h.apply_enc(self.f.forward_enc(xs)))

    def inv_eval_enc(self, ys):
        return self.f.inverse_enc(self.h.inverse().apply_enc(self.g.forward_enc(ys)))

    def describe(self) -> str:
        m = self.h
        return f"swapped:{m.a:.17g},{m.b:.17g},{m.c:.17g},{m.d:.17g}"


@dataclass(frozen=True, repr=False)
class HartLine(Circle):
    """The line y = slope*x + intercept together with the point at (inf, inf)."""

    slope: float
    intercept: float

    def __post_init__(self):
        if self.slope == 0.0:
            raise InvalidParameter("lines need a nonzero slope")

    @property
    def orientation(self) -> int:
        return 1 if self.slope > 0.0 else -1

    def eval(self, x) -> S1Point:
        x = s1(x)
        if x.is_inf:
            return INF
        out = self.slope * x.value + self.intercept
        return INF if math.isinf(out) else S1Point(out)

    def inv_eval(self, y) -> S1Point:
        y = s1(y)
        if y.is_inf:
            return INF
        out = (y.value - self.intercept) / self.slope
        return INF if math.isinf(out) else S1Point(out)

    def eval_enc(self, xs):
        with np.errstate(all="ignore"):
            return self.slope * np.asarray(xs, dtype=float) + self.intercept

    def inv_eval_enc(self, ys):
        with np.errstate(all="ignore"):
            return (np.asarray(ys, dtype=float) - self.intercept) / self.slope

    def describe(self) -> str:
        return f"line:{self.slope:.17g},{self.intercept:.17g}"


@dataclass(frozen=True, repr=False)
class HartHyperbola(Circle):
    """The graph y = a / f_{r,s}(x - b) + c plus the points (b, inf), (inf, c)."""

    a: float
    b: float
    c: float
    branch: Branch
    r: float
    s: float

    def __post_init__(self):
        if self.branch is Branch.POS and not self.a > 0.0:
            raise InvalidParameter("positive-branch hyperbolas need a > 0")
        if self.branch is Branch.NEG and not self.a < 0.0:
            raise InvalidParameter("negative-branch hyperbolas need a < 0")
        if not (self.r > 0.0 and self.s > 0.0):
            raise InvalidParameter("branch parameters must be positive")

    @property
    def orientation(self) -> int:
        return -1 if self.a > 0.0 else 1

    def eval(self, x) -> S1Point:
        x = s1(x)
        if x.is_inf:
            return S1Point(self.c)
        u = x.value - self.b
        if u == 0.0:
            return INF
        fu = _semi_f(self.r, self.s, u)
        if fu == 0.0 or math.isinf(fu):
            return INF if fu == 0.0 else S1Point(self.c)
        out = self.a / fu + self.c
        return INF if math.isinf(out) else S1Point(out)

    def inv_eval(self, y) -> S1Point:
        y = s1(y)
        if y.is_inf:
            return S1Point(self.b)
        w = y.value - self.c
        if w == 0.0:
            return INF
        target = self.a / w
        u = _semi_f_inv(self.r, self.s, target)
        if math.isinf(u):
            return INF
        out = self.b + u
        return INF if math.isinf(out) else S1Point(out)

    def eval_enc(self, xs):
        xs = np.asarray(xs, dtype=float)
        with np.errstate(all="ignore"):
            fu = _semi_enc(self.r, self.s, xs - self.b)
            return self.a / fu + self.c

    def inv_eval_enc(self, ys):
        ys = np.asarray(ys, dtype=float)
        with np.errstate(all="ignore"):
            target = self.a / (ys - self.c)
            return self.b + _semi_inv_enc(self.r, self.s, target)

    def describe(self) -> str:
        return (
            f"hyp:{self.a:.17g},{self.b:.17g},{self.c:.17g},{self.branch.value}"
        )


def sample_circle(C: Circle, n: int = 512) -> SampledCircle:
    """Evaluate a circle at n angle-uniform parameters."""
    thetas = np.arange(n) * (TAU / n)
    xs = enc_from_angle(thetas)
    ys = C.eval_enc(xs)
    return SampledCircle(thetas, xs, ys)


def underlying_moebius(C: Circle) -> Optional[MoebiusMap]:
    """The projective map whose graph the circle is, when there is one."""
    if isinstance(C, MoebiusGraph):
        return C.map
    if isinstance(C, SwappedGraph):
        if C.f.kind == Homeo.IDENTITY and C.g.kind == Homeo.IDENTITY:
            return C.h
    return None


def membership_residual(C: Circle, p: TorusPoint) -> float:
    """Chart-coordinate distance from a point to the graph."""
    forward = chart_distance(C.eval(p.x), p.y)
    backward = chart_distance(C.inv_eval(p.y), p.x)
    return min(forward, backward)


def circle_equal(C: Circle, D: Circle, plane: "Plane" = None, tol: float = None) -> bool:
    """Sampled-Hausdorff equality test for circles (descriptor agnostic)."""
    if tol is None:
        tol = plane.tol.circle_equal if plane is not None else 1e-7
    n = plane.tol.equal_samples if plane is not None else 512
    if C is D:
        return True
    return hausdorff_h(sample_circle(C, n), sample_circle(D, n)) <= tol


# plane families --------------------------------------------------------------

@dataclass(frozen=True)
class Tolerances:
    """Solver configuration shared by the joining and intersection code."""

    chart: float = CHART_TOL
    join_closed: float = 1e-9
    join_iterative: float = 1e-7
    circle_equal: float = 1e-7
    root_merge: float = 1e-9
    gamma_samples: int = 4096
    gamma_refine: float = 1e-12
    touch_tol: float = 1e-7
    touch_seeds: int = 256
    touch_refine: float = 1e-10
    equal_samples: int = 512
    join_seeds: int = 64


class Plane:
    """One of the implemented plane families with its joining solver."""

    CLASSICAL = "classical"
    SWAPPING = "swapping"
    HARTMANN = "hartmann"

    __slots__ = ("kind", "f", "g", "params", "tol")

    def __init__(self, kind, f=None, g=None, params=None, tol=None):
        self.kind = kind
        self.f = f if f is not None else Homeo.identity()
        self.g = g if g is not None else Homeo.identity()
        self.params = params
        self.tol = tol if tol is not None else Tolerances()
        if kind in (self.CLASSICAL, self.SWAPPING):
            if not (self.f.orientation_preserving and self.g.orientation_preserving):
                raise InvalidParameter("swapping planes need orientation-preserving f, g")
        elif kind == self.HARTMANN:
            if params is None or len(params) != 4 or any(not (v > 0.0) for v in params):
                raise InvalidParameter("Hartmann planes need four positive parameters")
        else:
            raise InvalidParameter(f"unknown plane family {kind!r}")

    @classmethod
    def classical(cls, tol: Tolerances = None) -> "Plane":
        return cls(cls.CLASSICAL, tol=tol)

    @classmethod
    def swapping(cls, f: Homeo, g: Homeo, tol: Tolerances = None) -> "Plane":
        return cls(cls.SWAPPING, f=f, g=g, tol=tol)

    @classmethod
    def swapping_semi(cls, d: float, s: float, tol: Tolerances = None) -> "Plane":
        """Swapping plane with a semi-multiplicative first map and identity second."""
        return cls.swapping(Homeo.semi_mult(d, s), Homeo.identity(), tol=tol)

    @classmethod
    def hartmann(cls, r1: float, s1: float, r2: float, s2: float,
                 tol: Tolerances = None) -> "Plane":
        return cls(cls.HARTMANN, params=(float(r1), float(s1), float(r2), float(s2)),
                   tol=tol)

    def join(self, p1: TorusPoint, p2: TorusPoint, p3: TorusPoint) -> Circle:
        if self.kind == self.HARTMANN:
            return join_hartmann(self.params, p1, p2, p3, tol=self.tol)
        return join_swapping(self.f, self.g, p1, p2, p3, tol=self.tol)

    def branch_params(self, branch: Branch) -> Tuple[float, float]:
        r1, s1, r2, s2 = self.params
        return (r1, s1) if branch is Branch.POS else (r2, s2)

    def describe(self) -> str:
        if self.kind == self.HARTMANN:
            return "hartmann(%g,%g;%g,%g)" % self.params
        if self.kind == self.CLASSICAL:
            return "classical"
        return f"swapping({self.f.describe()},{self.g.describe()})"

    def __repr__(self) -> str:
        return f"Plane<{self.describe()}>"


def _check_nonparallel(points: Sequence[TorusPoint], tol: float) -> None:
    if not pairwise_nonparallel(points, tol):
        raise ParallelInput("joining needs pairwise nonparallel points")


def join_swapping(f: Homeo, g: Homeo, p1: TorusPoint, p2: TorusPoint,
                  p3: TorusPoint, tol: Tolerances = None) -> Circle:
    """Join three points in a swapping half plane.

    Candidate A is the projective interpolant of the raw pairs and is a
    circle when orientation-preserving; candidate B interpolates the
    (f, g)-transformed pairs and is a circle when orientation-reversing.
    Exactly one candidate must validate.
    """
    tol = tol or Tolerances()
    points = (p1, p2, p3)
    _check_nonparallel(points, tol.chart)
    xs = [p.x for p in points]
    ys = [p.y for p in points]

    candidates = []
    m = mobius_from_three_pairs(xs, ys)
    if m.det_sign == 1:
        candidates.append(MoebiusGraph(m))
    h = mobius_from_three_pairs([f.forward(x) for x in xs],
                                [g.forward(y) for y in ys])
    if h.det_sign == -1:
        candidates.append(SwappedGraph(g, h, f))

    valid = []
    diagnostics = []
    for cand in candidates:
        residual = max(membership_residual(cand, p) for p in points)
        diagnostics.append((cand.describe(), residual))
        if residual <= tol.join_closed:
            valid.append(cand)
    if len(valid) != 1:
        raise JoinFailure(
            f"{len(valid)} joining candidates validated (expected 1)",
            candidates=diagnostics,
        )
    return valid[0]


# Hartmann joining ------------------------------------------------------------

def _interval_seeds(lo: float, hi: float, n: int) -> np.ndarray:
    """Seed points for a maximal open interval, denser toward the edges."""
    if math.isinf(lo) and math.isinf(hi):
        return np.tan((np.arange(n) + 0.5) * math.pi / n - math.pi / 2.0)
    k = n // 2
    if math.isinf(lo):
        return hi - np.logspace(-9.0, 13.0, n)
    if math.isinf(hi):
        return lo + np.logspace(-9.0, 13.0, n)
    width = hi - lo
    edge = np.logspace(-9.0, math.log10(0.45), k // 2)
    fracs = np.concatenate([edge, 1.0 - edge, np.linspace(0.02, 0.98, n - 2 * (k // 2))])
    return lo + width * np.unique(fracs)


def _bracket_roots(fn, seeds: np.ndarray, values: np.ndarray) -> List[float]:
    """Refine sign changes between finite adjacent samples with brentq."""
    roots: List[float] = []
    finite = np.isfinite(values)
    for i in range(len(seeds) - 1):
        if not (finite[i] and finite[i + 1]):
            continue
        a, b = values[i], values[i + 1]
        if a == 0.0:
            roots.append(float(seeds[i]))
            continue
        if a * b < 0.0:
            roots.append(float(brentq(fn, seeds[i], seeds[i + 1],
                                      xtol=1e-12, rtol=8.882e-16, maxiter=200)))
    if len(seeds) and np.isfinite(values[-1]) and values[-1] == 0.0:
        roots.append(float(seeds[-1]))
    return roots


def _dedupe_scalars(values: Iterable[float], tol: float = 1e-9) -> List[float]:
    out: List[float] = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > tol * max(1.0, abs(v)):
            out.append(v)
    return out


def _hart_polish_root(r: float, s: float, xs, ys, b0: float) -> Optional[float]:
    """Sharpen a pole-position root against the steepest membership residual.

    Near a needle-shaped fit the residual at the point closest to the pole
    moves at enormous rates in b, so the bracketing root tolerance is not
    enough; a few extended-precision secant steps on that residual are.
    """
    ld = np.longdouble
    xsl = [ld(v) for v in xs]
    ysl = [ld(v) for v in ys]
    k = int(np.argmin([abs(v - b0) for v in xs]))
    others = [i for i in range(3) if i != k]

    def residual(bv):
        try:
            u_a = 1.0 / _semi_f(r, s, xsl[others[0]] - bv)
            u_b = 1.0 / _semi_f(r, s, xsl[others[1]] - bv)
            if u_a == u_b:
                return None
            a = (ysl[others[0]] - ysl[others[1]]) / (u_a - u_b)
            c = ysl[others[0]] - a * u_a
            return a / _semi_f(r, s, xsl[k] - bv) + c - ysl[k]
        except ZeroDivisionError:
            return None

    b_prev = ld(b0)
    r_prev = residual(b_prev)
    if r_prev is None or not np.isfinite(r_prev):
        return None
    step = (xsl[k] - b_prev) * ld(1e-3)
    if step == 0.0:
        return None
    b_cur = b_prev + step
    r_cur = residual(b_cur)
    if r_cur is None or not np.isfinite(r_cur):
        return float(b_prev)
    for _ in range(16):
        if r_cur == r_prev:
            break
        b_next = b_cur - r_cur * (b_cur - b_prev) / (r_cur - r_prev)
        r_next = residual(b_next)
        if r_next is None or not np.isfinite(r_next):
            break
        b_prev, r_prev = b_cur, r_cur
        b_cur, r_cur = b_next, r_next
        if abs(r_cur) <= ld(1e-18):
            break
    return float(b_cur if abs(r_cur) <= abs(r_prev) else b_prev)


def _hart_candidate(params, branch: Branch, a: float, b: float, c: float) -> Optional[HartHyperbola]:
    r1, s1, r2, s2 = params
    r, s = (r1, s1) if branch is Branch.POS else (r2, s2)
    if not all(math.isfinite(v) for v in (a, b, c)):
        return None
    if branch is Branch.POS and a <= 0.0:
        return None
    if branch is Branch.NEG and a >= 0.0:
        return None
    return HartHyperbola(a, b, c, branch, r, s)


def join_hartmann(params: Tuple[float, float, float, float], p1: TorusPoint,
                  p2: TorusPoint, p3: TorusPoint, tol: Tolerances = None) -> Circle:
    """Join three points in a generalized Hartmann plane.

    Infinite coordinates pin parameters directly; otherwise the line form is
    tested first, and the remaining cases reduce to a scalar equation in the
    pole position b, solved by bracketed scanning on each maximal interval
    for each branch.
    """
    tol = tol or Tolerances()
    points = (p1, p2, p3)
    _check_nonparallel(points, tol.chart)
    r1, s1, r2, s2 = params

    both_inf = [p for p in points if p.x.is_inf and p.y.is_inf]
    x_inf = [p for p in points if p.x.is_inf and not p.y.is_inf]
    y_inf = [p for p in points if p.y.is_inf and not p.x.is_inf]
    finite = [p for p in points if not p.x.is_inf and not p.y.is_inf]

    candidates: List[Circle] = []

    if both_inf:
        # the common point of all lines is present: fit the line form
        (q1, q2) = finite
        slope = (q2.y.value - q1.y.value) / (q2.x.value - q1.x.value)
        candidates.append(HartLine(slope, q1.y.value - slope * q1.x.value))
    elif x_inf and y_inf:
        c = x_inf[0].y.value
        b = y_inf[0].x.value
        (q,) = finite
        for branch, (r, s) in ((Branch.POS, (r1, s1)), (Branch.NEG, (r2, s2))):
            a = (q.y.value - c) * _semi_f(r, s, q.x.value - b)
            cand = _hart_candidate(params, branch, a, b, c)
            if cand is not None:
                candidates.append(cand)
    elif x_inf:
        c = x_inf[0].y.value
        candidates.extend(_hart_pinned_c(params, c, finite, tol))
    elif y_inf:
        b = y_inf[0].x.value
        (q1, q2) = finite
        for branch, (r, s) in ((Branch.POS, (r1, s1)), (Branch.NEG, (r2, s2))):
            try:
                u1 = 1.0 / _semi_f(r, s, q1.x.value - b)
                u2 = 1.0 / _semi_f(r, s, q2.x.value - b)
            except ZeroDivisionError:
                continue
            if u1 == u2 or not (math.isfinite(u1) and math.isfinite(u2)):
                continue
            a = (q1.y.value - q2.y.value) / (u1 - u2)
            c = q1.y.value - a * u1
            cand = _hart_candidate(params, branch, a, b, c)
            if cand is not None:
                candidates.append(cand)
    else:
        xs = [p.x.value for p in points]
        ys = [p.y.value for p in points]
        scale = max(1.0, *(abs(v) for v in xs + ys))
        coll = (xs[1] - xs[0]) * (ys[2] - ys[0]) - (xs[2] - xs[0]) * (ys[1] - ys[0])
        if abs(coll) <= 1e-10 * scale * scale:
            slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
            candidates.append(HartLine(slope, ys[0] - slope * xs[0]))
        else:
            candidates.extend(_hart_generic(params, xs, ys, tol))

    valid: List[Tuple[float, Circle]] = []
    diagnostics = []
    threshold = tol.join_closed if (both_inf or (x_inf and y_inf) or y_inf) else tol.join_iterative
    for cand in candidates:
        residual = max(membership_residual(cand, p) for p in points)
        diagnostics.append((cand.describe(), residual))
        if residual <= threshold:
            valid.append((residual, cand))

    unique = _dedupe_circle_candidates(valid)
    if len(unique) > 1:
        # a sharp fit next to a marginal near-fit is not an ambiguity
        unique.sort(key=lambda item: item[0])
        if unique[0][0] <= 1e-3 * unique[1][0]:
            unique = unique[:1]
    if len(unique) != 1:
        raise JoinFailure(
            f"{len(unique)} joining candidates validated (expected 1)",
            candidates=diagnostics,
        )
    return unique[0][1]


def _dedupe_circle_candidates(scored: List[Tuple[float, Circle]]) -> List[Tuple[float, Circle]]:
    """Collapse parameter-close candidates, keeping the sharpest fit of each."""
    out: List[Tuple[float, Circle]] = []
    for res, C in sorted(scored, key=lambda item: item[0]):
        duplicate = False
        for _, D in out:
            if type(C) is type(D):
                if isinstance(C, HartLine):
                    close = (abs(C.slope - D.slope) <= 1e-6 * max(1.0, abs(C.slope))
                             and abs(C.intercept - D.intercept) <= 1e-6 * max(1.0, abs(C.intercept)))
                elif isinstance(C, HartHyperbola):
                    close = (C.branch is D.branch
                             and abs(C.b - D.b) <= 1e-6 * max(1.0, abs(C.b))
                             and abs(C.a - D.a) <= 1e-6 * max(1.0, abs(C.a)))
                else:
                    close = False
                if close:
                    duplicate = True
                    break
        if not duplicate:
            out.append((res, C))
    return out


def _hart_pinned_c(params, c: float, finite: List[TorusPoint],
                   tol: Tolerances) -> List[Circle]:
    """Hyperbola candidates when (inf, c) pins the horizontal asymptote."""
    r1, s1, r2, s2 = params
    (q1, q2) = finite
    x1, y1 = q1.x.value, q1.y.value
    x2, y2 = q2.x.value, q2.y.value
    out: List[Circle] = []
    for branch, (r, s) in ((Branch.POS, (r1, s1)), (Branch.NEG, (r2, s2))):
        roots: List[float] = []
        if r == 1.0 and s == 1.0:
            denom = y2 - y1
            if denom != 0.0:
                roots.append(((y2 - c) * x2 - (y1 - c) * x1) / denom)
        else:
            def g(b, _r=r, _s=s):
                try:
                    return ((y1 - c) * _semi_f(_r, _s, x1 - b)
                            - (y2 - c) * _semi_f(_r, _s, x2 - b))
                except ZeroDivisionError:
                    return math.nan

            lo_x, hi_x = sorted((x1, x2))
            for lo, hi in ((-math.inf, lo_x), (lo_x, hi_x), (hi_x, math.inf)):
                seeds = _interval_seeds(lo, hi, tol.join_seeds)
                with np.errstate(all="ignore"):
                    vals = np.array([g(b) for b in seeds])
                roots.extend(_bracket_roots(g, seeds, vals))
        for b in _dedupe_scalars(roots):
            a = (y1 - c) * _semi_f(r, s, x1 - b)
            cand = _hart_candidate(params, branch, a, b, c)
            if cand is not None:
                out.append(cand)
    return out


def _hart_inversion_seeds(r: float, s: float, xs, ys) -> List[float]:
    """Pole seeds for needle-shaped fits.

    When the pole sits right next to one of the points, the scan's ratio
    equation dips below seed resolution; fitting the remaining two points
    and inverting the pole position through the near point recovers such
    roots directly.
    """
    seeds: List[float] = []
    for k in range(3):
        others = [i for i in range(3) if i != k]
        xa, xb = xs[others[0]], xs[others[1]]
        ya, yb = ys[others[0]], ys[others[1]]
        b = xs[k]
        for _ in range(4):
            try:
                ua = 1.0 / _semi_f(r, s, xa - b)
                ub = 1.0 / _semi_f(r, s, xb - b)
            except ZeroDivisionError:
                break
            if ua == ub or not (math.isfinite(ua) and math.isfinite(ub)):
                break
            a = (ya - yb) / (ua - ub)
            c = ya - a * ua
            t = ys[k] - c
            if t == 0.0 or a == 0.0:
                break
            u_k = _semi_f_inv(r, s, a / t)
            if not math.isfinite(u_k):
                break
            b_new = xs[k] - u_k
            if not math.isfinite(b_new) or b_new == b:
                b = b_new if math.isfinite(b_new) else b
                break
            b = b_new
        if math.isfinite(b) and b not in xs:
            seeds.append(b)
    return seeds


def _hart_generic(params, xs: List[float], ys: List[float],
                  tol: Tolerances) -> List[Circle]:
    """Hyperbola candidates through three finite points.

    Reduces to (y1-y2)/(y1-y3) = (u1-u2)/(u1-u3) with u_i = 1/f(x_i - b),
    scanned over the maximal intervals between the x coordinates; needle
    fits whose dip evades the scan come from inversion seeds.
    """
    r1, s1, r2, s2 = params
    x1, x2, x3 = xs
    y1, y2, y3 = ys
    target = (y1 - y2) / (y1 - y3)
    out: List[Circle] = []
    for branch, (r, s) in ((Branch.POS, (r1, s1)), (Branch.NEG, (r2, s2))):
        roots: List[float] = []
        if r == 1.0 and s == 1.0:
            # projective graph: the pole solves a 2x2 linear system
            a11, a12 = y1 - y2, x1 - x2
            a21, a22 = y1 - y3, x1 - x3
            rhs1 = y1 * x1 - y2 * x2
            rhs2 = y1 * x1 - y3 * x3
            det2 = a11 * a22 - a12 * a21
            if det2 != 0.0:
                roots.append((rhs1 * a22 - rhs2 * a12) / det2)
        else:
            def phi(b, _r=r, _s=s):
                try:
                    u1 = 1.0 / _semi_f(_r, _s, x1 - b)
                    u2 = 1.0 / _semi_f(_r, _s, x2 - b)
                    u3 = 1.0 / _semi_f(_r, _s, x3 - b)
                    return (u1 - u2) / (u1 - u3) - target
                except ZeroDivisionError:
                    return math.nan

            edges = sorted(xs)
            intervals = (
                (-math.inf, edges[0]),
                (edges[0], edges[1]),
                (edges[1], edges[2]),
                (edges[2], math.inf),
            )
            for lo, hi in intervals:
                seeds = _interval_seeds(lo, hi, tol.join_seeds)
                with np.errstate(all="ignore"):
                    vals = np.array([phi(b) for b in seeds])
                roots.extend(_bracket_roots(phi, seeds, vals))
        roots.extend(_hart_inversion_seeds(r, s, xs, ys))
        for b in _dedupe_scalars(roots):
            polished = _hart_polish_root(r, s, xs, ys, b)
            if polished is not None:
                b = polished
            try:
                u1 = 1.0 / _semi_f(r, s, x1 - b)
                u2 = 1.0 / _semi_f(r, s, x2 - b)
            except ZeroDivisionError:
                continue
            if u1 == u2 or not (math.isfinite(u1) and math.isfinite(u2)):
                continue
            a = (y1 - y2) / (u1 - u2)
            c = y1 - a * u1
            cand = _hart_candidate(params, branch, a, b, c)
            if cand is not None:
                out.append(cand)
    return out
