"""Real projective maps x -> (ax+b)/(cx+d) acting on the extended reals.

Coefficients are stored up to scale, normalized so |ad - bc| = 1 and the
first nonzero coefficient is positive; two maps representing the same
projective transformation then compare equal.  The determinant sign is a
projective invariant and splits the group into the orientation-preserving
and orientation-reversing halves.
"""

from __future__ import annotations

import math
from typing import Sequence, Tuple

import numpy as np

from .circle_geometry import INF, S1Point, chart_distance, s1, s1_close
from .errors import DegenerateInput

_SIGN_EPS = 1e-12


def _normalize(a: float, b: float, c: float, d: float) -> Tuple[float, float, float, float]:
    det = a * d - b * c
    if det == 0.0 or not math.isfinite(det):
        raise DegenerateInput(f"degenerate coefficients ({a}, {b}, {c}, {d})")
    scale = math.sqrt(abs(det))
    a, b, c, d = a / scale, b / scale, c / scale, d / scale
    for coeff in (a, b, c, d):
        if abs(coeff) > _SIGN_EPS:
            if coeff < 0.0:
                a, b, c, d = -a, -b, -c, -d
            break
    return a, b, c, d


class MoebiusMap:
    """A nondegenerate projective map of the circle."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: float, b: float, c: float, d: float):
        self.a, self.b, self.c, self.d = _normalize(float(a), float(b), float(c), float(d))

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def coefficients(self) -> Tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    @property
    def det_sign(self) -> int:
        """+1 for the orientation-preserving half, -1 for the reversing half."""
        return 1 if (self.a * self.d - self.b * self.c) > 0.0 else -1

    def apply(self, x) -> S1Point:
        """Evaluate at a circle point with the projective conventions.

        infinity maps to a/c (infinity when c = 0); the pole -d/c maps to
        infinity.  Large finite arguments are routed through the reciprocal
        chart for uniform conditioning.
        """
        x = s1(x)
        if x.is_inf:
            if self.c == 0.0:
                return INF
            return S1Point(self.a / self.c)
        xv = x.value
        if abs(xv) > 1.0:
            t = 1.0 / xv
            num = self.a + self.b * t
            den = self.c + self.d * t
        else:
            num = self.a * xv + self.b
            den = self.c * xv + self.d
        if den == 0.0:
            return INF
        r = num / den
        if not math.isfinite(r):
            return INF
        return S1Point(r)

    def apply_enc(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized apply on IEEE encodings (+-inf for infinity)."""
        xs = np.asarray(xs, dtype=float)
        with np.errstate(all="ignore"):
            outer = np.abs(xs) > 1.0
            t = np.where(xs != 0.0, 1.0 / xs, 0.0)
            num = np.where(outer, self.a + self.b * t, self.a * xs + self.b)
            den = np.where(outer, self.c + self.d * t, self.c * xs + self.d)
            out = num / den
            out = np.where(den == 0.0, np.inf, out)
        return out

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """self after other, as the matrix product."""
        return MoebiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def approx_equal(self, other: "MoebiusMap", tol: float = 1e-12) -> bool:
        return all(
            abs(u - v) <= tol for u, v in zip(self.coefficients, other.coefficients)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, MoebiusMap):
            return NotImplemented
        return self.approx_equal(other)

    __hash__ = None

    def __repr__(self) -> str:
        return f"MoebiusMap({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"


def mobius_apply(m: MoebiusMap, x) -> S1Point:
    return m.apply(x)


def mobius_compose(m1: MoebiusMap, m2: MoebiusMap) -> MoebiusMap:
    return m1.compose(m2)


def mobius_inverse(m: MoebiusMap) -> MoebiusMap:
    return m.inverse()


def det_sign(m: MoebiusMap) -> int:
    return m.det_sign


def _chart_coeffs(p: S1Point, q: S1Point, r: S1Point, one):
    """Coefficients of the map sending (p, q, r) to (0, 1, inf).

    `one` fixes the scalar type; extended precision is used for the
    interpolation pipeline so that ill-conditioned fits still deliver
    float64-accurate coefficients.
    """
    zero = one * 0
    if p.is_inf:
        # x -> (q - r) / (x - r)
        return (zero, one * q.value - one * r.value, one, -one * r.value)
    if q.is_inf:
        # x -> (x - p) / (x - r)
        return (one, -one * p.value, one, -one * r.value)
    if r.is_inf:
        # x -> (x - p) / (q - p)
        return (one, -one * p.value, zero, one * q.value - one * p.value)
    qr = one * q.value - one * r.value
    qp = one * q.value - one * p.value
    return (qr, -one * p.value * qr, qp, -one * r.value * qp)


def _to_zero_one_inf(p: S1Point, q: S1Point, r: S1Point) -> MoebiusMap:
    """The unique map sending (p, q, r) to (0, 1, inf)."""
    return MoebiusMap(*_chart_coeffs(p, q, r, 1.0))


def mobius_from_three_pairs(src: Sequence, dst: Sequence) -> MoebiusMap:
    """The unique projective map with src[i] -> dst[i] for i = 0, 1, 2.

    Both triples are routed through (0, 1, inf), which handles infinity in
    either triple without case explosion.  The coefficient arithmetic runs
    in extended precision: near-degenerate triples amplify rounding noise
    into circle-level errors near the fitted map's pole otherwise.
    """
    src = [s1(x) for x in src]
    dst = [s1(y) for y in dst]
    for triple, name in ((src, "source"), (dst, "destination")):
        for i in range(3):
            for j in range(i + 1, 3):
                if s1_close(triple[i], triple[j]):
                    raise DegenerateInput(f"{name} triple has a repeated point")
    one = np.longdouble(1.0)
    fa, fb, fc, fd = _chart_coeffs(*src, one)
    ga, gb, gc, gd = _chart_coeffs(*dst, one)
    # adjugate of the destination chart map, times the source chart map
    a = gd * fa - gb * fc
    b = gd * fb - gb * fd
    c = -gc * fa + ga * fc
    d = -gc * fb + ga * fd
    return MoebiusMap(float(a), float(b), float(c), float(d))


def cross_ratio(a, b, c, d) -> float:
    """Cross-ratio (a - c)(b - d) / ((b - c)(a - d)) with infinity handled.

    For four pairwise distinct circle points the value is a finite real
    outside {0, 1}.
    """
    pts = [s1(v) for v in (a, b, c, d)]
    # the map sending (b, c, d) -> (1, 0, inf) evaluates the cross-ratio at a
    m = _to_zero_one_inf(pts[2], pts[1], pts[3])
    out = m.apply(pts[0])
    if out.is_inf:
        raise DegenerateInput("cross-ratio of a degenerate quadruple")
    return out.value
