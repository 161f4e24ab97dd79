"""Torus maps, the explicit automorphism families, and the map-space metric.

A candidate automorphism acts coordinatewise (optionally after swapping
the factors).  The two families realized here act on the swapping half
planes with a semi-multiplicative first map, and on the generalized
Hartmann planes; circle invariance is probed by pushing sampled circles
through the map and refitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .circle_geometry import (
    INF,
    S1Point,
    TAU,
    TorusPoint,
    chart_distance,
    embed_angles,
    enc_angle,
    enc_chart_distance,
    enc_from_angle,
    metric_e,
    point_at_angle,
)
from .errors import InvalidParameter, InvalidTrials
from .moebius import MoebiusMap
from .planes import Homeo, Plane, sample_circle
from .verification import VerificationReport, random_circle, random_distinct_xs


@dataclass(frozen=True)
class TorusMap:
    """A candidate automorphism: one circle map per coordinate.

    With swap set, the coordinates are exchanged before the maps apply.
    The flips pair marks orientation-reversing component maps; family
    members never swap or flip.
    """

    xmap: Homeo
    ymap: Homeo
    swap: bool = False

    @property
    def flips(self) -> Tuple[bool, bool]:
        return (not self.xmap.orientation_preserving,
                not self.ymap.orientation_preserving)

    def describe(self) -> str:
        tag = "swap;" if self.swap else ""
        return f"{tag}{self.xmap.describe()};{self.ymap.describe()}"

    def __repr__(self) -> str:
        return f"TorusMap<{self.describe()}>"


def identity_map() -> TorusMap:
    return TorusMap(Homeo.identity(), Homeo.identity())


def apply_map(sigma: TorusMap, p: TorusPoint) -> TorusPoint:
    if sigma.swap:
        return TorusPoint(sigma.xmap.forward(p.y), sigma.ymap.forward(p.x))
    return TorusPoint(sigma.xmap.forward(p.x), sigma.ymap.forward(p.y))


def apply_map_enc(sigma: TorusMap, xs: np.ndarray, ys: np.ndarray):
    if sigma.swap:
        return sigma.xmap.forward_enc(ys), sigma.ymap.forward_enc(xs)
    return sigma.xmap.forward_enc(xs), sigma.ymap.forward_enc(ys)


def compose_maps(sigma: TorusMap, tau: TorusMap) -> TorusMap:
    """sigma after tau; in-family compositions stay exact in parameters."""
    first = tau.ymap if sigma.swap else tau.xmap
    second = tau.xmap if sigma.swap else tau.ymap
    return TorusMap(
        sigma.xmap.compose(first),
        sigma.ymap.compose(second),
        sigma.swap != tau.swap,
    )


def family_swapping(r: float, delta: MoebiusMap) -> TorusMap:
    """Scale the first coordinate, act projectively on the second.

    These maps preserve the circles of a swapping half plane whose first
    map is semi-multiplicative, thanks to the homogeneity of that map.
    """
    if not (isinstance(r, (int, float)) and r > 0.0):
        raise InvalidParameter("the scale must be positive")
    if delta.det_sign != 1:
        raise InvalidParameter("the second-coordinate map must be orientation-preserving")
    return TorusMap(Homeo.affine(float(r), 0.0), Homeo.moebius(delta))


def family_hartmann(r: float, s: float, a: float, b: float) -> TorusMap:
    """Affine maps per coordinate, fixing infinity in each factor."""
    if not (r > 0.0 and s > 0.0):
        raise InvalidParameter("affine scales must be positive")
    return TorusMap(Homeo.affine(float(r), float(a)), Homeo.affine(float(s), float(b)))


def is_automorphism(plane: Plane, sigma: TorusMap, trials: int = 100,
                    tol: float = 1e-6, seed: int = 42) -> VerificationReport:
    """Probe circle invariance of a torus map by push-and-refit.

    Each trial samples a circle, pushes three of its points through the
    map, rejoins the images, and measures how far the pushed sample cloud
    strays from the refitted circle's graph (the directed distance to the
    curve; a finite-cloud Hausdorff would be floored by sample spacing).
    """
    if trials < 1:
        raise InvalidTrials("at least one trial is required")
    rng = np.random.default_rng(seed)
    failures = []
    max_residual = 0.0
    for index in range(trials):
        C = random_circle(plane, rng)
        xs = random_distinct_xs(rng, 3)
        pts = [TorusPoint(x, C.eval(x)) for x in xs]
        images = [apply_map(sigma, pt) for pt in pts]
        try:
            D = plane.join(*images)
        except Exception as exc:
            failures.append({"trial": index, "error": type(exc).__name__,
                             "circle": C.describe()})
            max_residual = math.inf
            continue
        sampled = sample_circle(C, 256)
        ix, iy = apply_map_enc(sigma, sampled.xs, sampled.ys)
        with np.errstate(all="ignore"):
            forward = enc_chart_distance(D.eval_enc(ix), iy)
            backward = enc_chart_distance(D.inv_eval_enc(iy), ix)
        residual = float(np.max(np.minimum(forward, backward)))
        max_residual = max(max_residual, residual)
        if residual > tol:
            failures.append({"trial": index, "residual": residual,
                             "circle": C.describe()})
    return VerificationReport(
        suite="is_automorphism",
        trials=trials,
        failures=failures,
        max_residual=max_residual,
        verdict="pass" if not failures else "fail",
        seed=seed,
        detail=sigma.describe(),
    )


class KernelMembership(Enum):
    T_PLUS = "T_plus"
    T_MINUS = "T_minus"
    BOTH = "both"
    NEITHER = "neither"


_KERNEL_PROBES = 128
_KERNEL_TOL = 1e-10


def _component_is_identity(h: Homeo, probes: int = _KERNEL_PROBES,
                           tol: float = _KERNEL_TOL) -> bool:
    thetas = (np.arange(probes) + 0.31) * (TAU / probes)
    for theta in thetas:
        x = point_at_angle(float(theta))
        if chart_distance(h.forward(x), x) > tol:
            return False
    return True


def kernel_membership(sigma: TorusMap) -> KernelMembership:
    """Classify which parallel-class kernels contain the map.

    Fixing every vertical means the first coordinate is untouched; fixing
    every horizontal means the second is.  Identity component maps are
    recognized pointwise on a probe grid.
    """
    if sigma.swap:
        return KernelMembership.NEITHER
    x_id = _component_is_identity(sigma.xmap)
    y_id = _component_is_identity(sigma.ymap)
    if x_id and y_id:
        return KernelMembership.BOTH
    if x_id:
        return KernelMembership.T_PLUS
    if y_id:
        return KernelMembership.T_MINUS
    return KernelMembership.NEITHER


def metric_e_tilde(sigma: TorusMap, tau: TorusMap, n: int = 256 * 256) -> float:
    """Discretized sup distance between two torus maps.

    The supremum of pointwise embedded distances over an angle-uniform
    grid with at least 64 x 64 points.
    """
    if n < 64 * 64:
        raise InvalidParameter("the grid needs at least 64^2 points")
    side = max(64, int(round(math.sqrt(n))))
    angles = (np.arange(side) + 0.5) * (TAU / side)
    gx, gy = np.meshgrid(angles, angles, indexing="ij")
    xs = enc_from_angle(gx.ravel())
    ys = enc_from_angle(gy.ravel())
    sx, sy = apply_map_enc(sigma, xs, ys)
    tx, ty = apply_map_enc(tau, xs, ys)
    e_s = embed_angles(enc_angle(sx), enc_angle(sy))
    e_t = embed_angles(enc_angle(tx), enc_angle(ty))
    return float(np.max(np.linalg.norm(e_s - e_t, axis=-1)))


def random_family_member(plane: Plane, rng: np.random.Generator) -> TorusMap:
    """A random member of the automorphism family acting on the plane."""
    if plane.kind == Plane.HARTMANN:
        r, s = np.exp(rng.uniform(-1.2, 1.2, size=2))
        a, b = rng.uniform(-2.0, 2.0, size=2)
        return family_hartmann(float(r), float(s), float(a), float(b))
    r = float(np.exp(rng.uniform(-1.2, 1.2)))
    while True:
        coef = rng.normal(size=4)
        det = coef[0] * coef[3] - coef[1] * coef[2]
        if abs(det) > 0.05:
            break
    if det < 0.0:
        coef[2], coef[3] = -coef[2], -coef[3]
    delta = MoebiusMap(*coef)
    return family_swapping(r, delta)
