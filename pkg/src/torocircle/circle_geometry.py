"""The circle as the extended real line, the torus point set, and its metrics.

The circle is modelled as the reals plus one symbolic point at infinity.  The
uniform parametrization is x = tan(theta/2) with infinity at theta = pi.  The
torus embeds in 3-space with radii (2, 1); all distances below derive from
that embedding.

Vectorized helpers encode circle points as IEEE floats with +/-inf standing
for the single infinite point; the public S1Point type keeps infinity
symbolic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DegenerateInput, EmptyInput

TAU = 2.0 * math.pi

#: default tolerance for coincidence of circle points, in chart coordinates
CHART_TOL = 1e-12


class S1Point:
    """A point of the circle: a finite real or the point at infinity."""

    __slots__ = ("_value",)

    def __init__(self, value: Union[float, None]):
        if value is None:
            self._value = None
            return
        v = float(value)
        if math.isnan(v):
            raise DegenerateInput("NaN is not a circle point")
        if v == 0.0:
            v = 0.0  # collapse negative zero
        self._value = None if math.isinf(v) else v

    @property
    def is_inf(self) -> bool:
        return self._value is None

    @property
    def value(self) -> Union[float, None]:
        """The finite value, or None for the point at infinity."""
        return self._value

    def encode(self) -> float:
        """IEEE encoding used by the vectorized kernels (inf for infinity)."""
        return math.inf if self._value is None else self._value

    def angle(self) -> float:
        return angle_of(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, S1Point):
            return NotImplemented
        return self._value == other._value

    def __hash__(self):
        return hash(self._value)

    def __repr__(self) -> str:
        return "S1Point(inf)" if self._value is None else f"S1Point({self._value!r})"


#: the point at infinity
INF = S1Point(None)


def s1(x) -> S1Point:
    """Coerce a float, the string 'inf', or an S1Point into an S1Point."""
    if isinstance(x, S1Point):
        return x
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        return S1Point(float(x))
    return S1Point(x)


def angle_of(x: S1Point) -> float:
    """Angle in [0, 2*pi) of the uniform parametrization, infinity -> pi."""
    x = s1(x)
    if x.is_inf:
        return math.pi
    theta = 2.0 * math.atan(x.value)
    if theta < 0.0:
        theta += TAU
    return theta


def point_at_angle(theta: float) -> S1Point:
    """Inverse of angle_of; theta = pi maps to infinity."""
    t = math.fmod(theta, TAU)
    if t < 0.0:
        t += TAU
    if t == math.pi:
        return INF
    return S1Point(math.tan(t / 2.0))


def chart_distance(a: S1Point, b: S1Point) -> float:
    """Distance between circle points in the better-conditioned chart.

    The identity chart covers finite values, the chart x -> -1/x covers the
    neighbourhood of infinity; the smaller of the two chart differences is
    returned, so the result is small exactly when the points coincide on
    the circle.
    """
    a, b = s1(a), s1(b)
    inner = math.inf
    if not a.is_inf and not b.is_inf:
        inner = abs(a.value - b.value)
    outer = math.inf
    av = 0.0 if a.is_inf else (None if a.value == 0.0 else -1.0 / a.value)
    bv = 0.0 if b.is_inf else (None if b.value == 0.0 else -1.0 / b.value)
    if av is not None and bv is not None:
        outer = abs(av - bv)
    return min(inner, outer)


def s1_close(a: S1Point, b: S1Point, tol: float = CHART_TOL) -> bool:
    return chart_distance(a, b) <= tol


# vectorized angle/encoding kernels ----------------------------------------

def enc_angle(enc: np.ndarray) -> np.ndarray:
    """Angles in [0, 2*pi) for IEEE-encoded circle points (+-inf -> pi)."""
    theta = 2.0 * np.arctan(enc)
    return np.where(theta < 0.0, theta + TAU, theta)


def enc_from_angle(theta: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return np.tan(np.asarray(theta, dtype=float) / 2.0)


def enc_chart_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized chart_distance on IEEE encodings."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(all="ignore"):
        inner = np.abs(a - b)
        inner = np.where(np.isfinite(inner), inner, np.inf)
        ra = np.where(a != 0.0, -1.0 / a, np.inf)
        rb = np.where(b != 0.0, -1.0 / b, np.inf)
        outer = np.abs(ra - rb)
        outer = np.where(np.isfinite(outer), outer, np.inf)
    return np.minimum(inner, outer)


@dataclass(frozen=True)
class TorusPoint:
    """A point of the torus, one circle coordinate per factor."""

    x: S1Point
    y: S1Point

    @classmethod
    def of(cls, x, y) -> "TorusPoint":
        return cls(s1(x), s1(y))

    def angles(self) -> tuple:
        return angle_of(self.x), angle_of(self.y)

    def __repr__(self) -> str:
        def fmt(v):
            return "inf" if v.is_inf else repr(v.value)

        return f"TorusPoint({fmt(self.x)}, {fmt(self.y)})"


class Parallel(Enum):
    PLUS = "plus"
    MINUS = "minus"
    EQUAL = "equal"
    NONE = "none"


def parallel_relation(p: TorusPoint, q: TorusPoint, tol: float = CHART_TOL) -> Parallel:
    """Classify the parallel relation between two torus points.

    Points sharing the first coordinate are plus-parallel (same vertical),
    points sharing the second are minus-parallel (same horizontal).
    """
    same_x = s1_close(p.x, q.x, tol)
    same_y = s1_close(p.y, q.y, tol)
    if same_x and same_y:
        return Parallel.EQUAL
    if same_x:
        return Parallel.PLUS
    if same_y:
        return Parallel.MINUS
    return Parallel.NONE


def nonparallel(p: TorusPoint, q: TorusPoint, tol: float = CHART_TOL) -> bool:
    return parallel_relation(p, q, tol) is Parallel.NONE


def pairwise_nonparallel(points: Sequence[TorusPoint], tol: float = CHART_TOL) -> bool:
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if parallel_relation(points[i], points[j], tol) is not Parallel.NONE:
                return False
    return True


# the embedded metric -------------------------------------------------------

MAJOR_RADIUS = 2.0
MINOR_RADIUS = 1.0


def embed_angles(theta, phi) -> np.ndarray:
    """Embed torus angle pairs into 3-space; accepts scalars or arrays.

    Returns shape (..., 3).
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ring = MAJOR_RADIUS + MINOR_RADIUS * np.cos(phi)
    return np.stack(
        [ring * np.cos(theta), ring * np.sin(theta), MINOR_RADIUS * np.sin(phi)],
        axis=-1,
    )


def embed_point(p: TorusPoint) -> np.ndarray:
    theta, phi = p.angles()
    return embed_angles(theta, phi)


def metric_e(p: TorusPoint, q: TorusPoint) -> float:
    """Euclidean distance between the embedded torus points."""
    return float(np.linalg.norm(embed_point(p) - embed_point(q)))


@dataclass(frozen=True)
class SampledCircle:
    """A circle discretized at angle-uniform parameters.

    Coordinates are stored as IEEE encodings; torus points and the embedded
    3-space cloud are derived on demand.
    """

    thetas: np.ndarray
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        if len(self.thetas) < 64:
            raise DegenerateInput("sampled circles need at least 64 samples")

    def __len__(self) -> int:
        return len(self.thetas)

    @cached_property
    def embedded(self) -> np.ndarray:
        return embed_angles(enc_angle(self.xs), enc_angle(self.ys))

    @property
    def points(self) -> list:
        out = []
        for xe, ye in zip(self.xs, self.ys):
            out.append(TorusPoint(S1Point(None if np.isinf(xe) else float(xe)),
                                  S1Point(None if np.isinf(ye) else float(ye))))
        return out


def _as_embedded(points) -> np.ndarray:
    if isinstance(points, SampledCircle):
        return points.embedded
    if isinstance(points, np.ndarray) and points.ndim == 2 and points.shape[1] == 3:
        return points
    pts = list(points)
    if len(pts) == 0:
        raise EmptyInput("empty point set")
    thetas = np.array([angle_of(p.x) for p in pts])
    phis = np.array([angle_of(p.y) for p in pts])
    return embed_angles(thetas, phis)


def hausdorff_h(A, B) -> float:
    """Hausdorff distance between two finite torus point sets.

    The larger of the two directed sup-inf distances under the embedded
    metric.  Accepts sequences of TorusPoints, SampledCircles, or (n, 3)
    embedded arrays.
    """
    ea = _as_embedded(A)
    eb = _as_embedded(B)
    if len(ea) == 0 or len(eb) == 0:
        raise EmptyInput("empty point set")
    # pairwise distances; sets stay small (<= a few thousand points)
    d2 = np.sum((ea[:, None, :] - eb[None, :, :]) ** 2, axis=-1)
    forward = np.sqrt(np.max(np.min(d2, axis=1)))
    backward = np.sqrt(np.max(np.min(d2, axis=0)))
    return float(max(forward, backward))


def cyclic_between(a: S1Point, b: S1Point, c: S1Point) -> bool:
    """True when b lies strictly inside the positive arc from a to c."""
    a, b, c = s1(a), s1(b), s1(c)
    if s1_close(a, b) or s1_close(b, c) or s1_close(a, c):
        raise DegenerateInput("cyclic order needs pairwise distinct points")
    ta = angle_of(a)
    tb = (angle_of(b) - ta) % TAU
    tc = (angle_of(c) - ta) % TAU
    return 0.0 < tb < tc
