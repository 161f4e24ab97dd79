"""Command-line front end: plane construction, verification, operations.

Exit codes: 0 success, 1 usage or input error, 2 verification failure,
3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional, TextIO, Tuple

import numpy as np

from .circle_geometry import INF, S1Point, TorusPoint, angle_of, s1
from .derived import generate_dense
from .errors import (
    ConstraintError,
    GeometryError,
    InvalidParameter,
    JoinFailure,
    NoTouchingCircle,
    ParseError,
)
from .moebius import MoebiusMap
from .operations import (
    SequenceSpec,
    alpha_join,
    gamma_intersect,
    k4_probe,
    touching_solver,
)
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
    sample_circle,
)
from .verification import (
    verify_joining,
    verify_rigidity,
    verify_touching,
    verify_two_point_bound,
)

_KNOWN_KEYS = {"family", "r1", "s1", "r2", "s2", "d", "s", "seed",
               "tol_join", "tol_hausdorff"}


@dataclass
class PlaneConfig:
    """Validated plane selection plus optional tolerance overrides."""

    family: str
    parameters: dict = field(default_factory=dict)
    seed: int = 42
    tol_join: Optional[float] = None
    tol_hausdorff: Optional[float] = None

    def build(self) -> Plane:
        tol = Tolerances()
        if self.tol_join is not None or self.tol_hausdorff is not None:
            kwargs = {}
            if self.tol_join is not None:
                kwargs["join_iterative"] = self.tol_join
            if self.tol_hausdorff is not None:
                kwargs["circle_equal"] = self.tol_hausdorff
            from dataclasses import replace

            tol = replace(tol, **kwargs)
        if self.family == "classical":
            return Plane.classical(tol=tol)
        if self.family == "swapping":
            return Plane.swapping_semi(self.parameters["d"], self.parameters["s"], tol=tol)
        return Plane.hartmann(self.parameters["r1"], self.parameters["s1"],
                              self.parameters["r2"], self.parameters["s2"], tol=tol)


def _parse_lines(text: str):
    """Yield (line_number, section, key, value) from key = value text."""
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            continue
        for chunk in line.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            if "=" not in chunk:
                raise ParseError(f"expected key = value, got {chunk!r}", line=lineno)
            key, value = chunk.split("=", 1)
            yield lineno, section, key.strip().lower(), value.strip()


def parse_config(text: str) -> PlaneConfig:
    """Parse the line-oriented plane configuration format."""
    values = {}
    for lineno, section, key, value in _parse_lines(text):
        if section not in (None, "plane"):
            raise ParseError(f"unknown section [{section}]", line=lineno)
        if key not in _KNOWN_KEYS:
            raise ParseError(f"unknown key {key!r}", line=lineno)
        values[key] = (lineno, value)

    if "family" not in values:
        raise ParseError("missing required key 'family'")
    family = values.pop("family")[1].lower()
    if family not in ("classical", "swapping", "hartmann"):
        raise ConstraintError(f"unknown family {family!r}")

    def take_float(key, default=None):
        if key not in values:
            return default
        lineno, raw = values.pop(key)
        try:
            return float(raw)
        except ValueError:
            raise ParseError(f"{key} must be a number, got {raw!r}", line=lineno)

    def take_int(key, default=None):
        if key not in values:
            return default
        lineno, raw = values.pop(key)
        try:
            return int(raw)
        except ValueError:
            raise ParseError(f"{key} must be an integer, got {raw!r}", line=lineno)

    seed = take_int("seed", 42)
    tol_join = take_float("tol_join")
    tol_hausdorff = take_float("tol_hausdorff")
    for tol_name, tol_value in (("tol_join", tol_join), ("tol_hausdorff", tol_hausdorff)):
        if tol_value is not None and not tol_value > 0.0:
            raise ConstraintError(f"{tol_name} must be positive")

    parameters = {}
    if family == "swapping":
        parameters["d"] = take_float("d", 1.0)
        parameters["s"] = take_float("s", 1.0)
        for key in ("d", "s"):
            if not parameters[key] > 0.0:
                raise ConstraintError(f"{key} must be positive")
    elif family == "hartmann":
        for key in ("r1", "s1", "r2", "s2"):
            parameters[key] = take_float(key, 1.0)
            if not parameters[key] > 0.0:
                raise ConstraintError(f"{key} must be positive")

    if values:
        key = sorted(values)[0]
        lineno = values[key][0]
        raise ParseError(f"key {key!r} does not apply to family {family!r}", line=lineno)

    return PlaneConfig(family=family, parameters=parameters, seed=seed,
                       tol_join=tol_join, tol_hausdorff=tol_hausdorff)


# descriptor text format ------------------------------------------------------

def format_circle(C: Circle) -> str:
    return C.describe()


def parse_circle(text: str, plane: Plane) -> Circle:
    """Parse the compact circle descriptor grammar.

    moebius:a,b,c,d | swapped:a,b,c,d | line:s,t | hyp:a,b,c,pos|neg
    """
    text = text.strip()
    if ":" not in text:
        raise ParseError(f"bad circle descriptor {text!r}")
    kind, payload = text.split(":", 1)
    parts = [part.strip() for part in payload.split(",")]
    kind = kind.strip().lower()
    try:
        if kind == "moebius":
            return MoebiusGraph(MoebiusMap(*(float(v) for v in parts)))
        if kind == "swapped":
            return SwappedGraph(plane.g, MoebiusMap(*(float(v) for v in parts)), plane.f)
        if kind == "line":
            slope, intercept = (float(v) for v in parts)
            return HartLine(slope, intercept)
        if kind == "hyp":
            a, b, c = (float(v) for v in parts[:3])
            branch = Branch.POS if parts[3].lower() == "pos" else Branch.NEG
            if plane.kind != Plane.HARTMANN:
                raise ParseError("hyperbola descriptors need a hartmann plane")
            r, s = plane.branch_params(branch)
            return HartHyperbola(a, b, c, branch, r, s)
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"bad circle descriptor {text!r}: {exc}")
    raise ParseError(f"unknown circle kind {kind!r}")


def _point(xtext: str, ytext: str) -> TorusPoint:
    return TorusPoint(s1(xtext), s1(ytext))


def _fmt_s1(v: S1Point) -> str:
    return "inf" if v.is_inf else f"{v.value:.17g}"


def parse_k4_spec(text: str) -> Tuple[List[SequenceSpec], SequenceSpec, int, float]:
    """Read a tripod spec file: sections [p1] [p2] [p3] [p] [probe]."""
    sections = {}
    for lineno, section, key, value in _parse_lines(text):
        if section is None:
            raise ParseError("keys must appear inside a section", line=lineno)
        sections.setdefault(section, {})[key] = (lineno, value)

    def build(name: str) -> SequenceSpec:
        if name not in sections:
            raise ParseError(f"missing section [{name}]")
        data = {k: v for k, (_, v) in sections[name].items()}
        try:
            limit = _point(data["x"], data["y"])
            return SequenceSpec(limit=limit, dx=float(data.get("dx", 0.0)),
                                dy=float(data.get("dy", 0.0)),
                                power=float(data.get("power", 1.0)))
        except KeyError as exc:
            raise ParseError(f"section [{name}] is missing key {exc}")

    tripod = [build("p1"), build("p2"), build("p3")]
    extra = build("p")
    probe = {k: v for k, (_, v) in sections.get("probe", {}).items()}
    n_max = int(probe.get("n_max", 1000))
    tol = float(probe.get("tol", 1e-4))
    return tripod, extra, n_max, tol


# command implementations -----------------------------------------------------

def _cmd_verify(plane: Plane, config: PlaneConfig, args, out: TextIO) -> int:
    trials_join = args.trials or 1000
    trials_touch = args.touch_trials or 500
    seed = config.seed if args.seed is None else args.seed
    reports = [
        verify_joining(plane, trials=trials_join, seed=seed),
        verify_two_point_bound(plane, trials=trials_join, seed=seed),
        verify_touching(plane, trials=trials_touch, seed=seed),
        verify_rigidity(plane, trials=trials_touch, seed=seed),
    ]
    for report in reports:
        out.write(report.to_text() + "\n\n")
    if args.report:
        with open(args.report, "w") as handle:
            json.dump([r.to_dict() for r in reports], handle, indent=2)
    return 0 if all(r.passed for r in reports) else 2


def _cmd_join(plane: Plane, args, out: TextIO) -> int:
    pts = [_point(args.coords[i], args.coords[i + 1]) for i in (0, 2, 4)]
    C = alpha_join(plane, *pts)
    out.write(format_circle(C) + "\n")
    return 0


def _cmd_intersect(plane: Plane, args, out: TextIO) -> int:
    C = parse_circle(args.first, plane)
    D = parse_circle(args.second, plane)
    result = gamma_intersect(C, D, plane=plane)
    out.write(result.kind.value + "\n")
    for pt in result.points:
        out.write(f"{_fmt_s1(pt.x)},{_fmt_s1(pt.y)}\n")
    return 0


def _cmd_touch(plane: Plane, args, out: TextIO) -> int:
    C = parse_circle(args.circle, plane)
    p = _point(args.px, args.py)
    q = _point(args.qx, args.qy)
    D = touching_solver(plane, C, p, q)
    out.write(format_circle(D) + "\n")
    return 0


def _cmd_orbit(plane: Plane, args, out: TextIO) -> int:
    from .automorphisms import apply_map, apply_map_enc, family_hartmann, family_swapping
    from .circle_geometry import enc_chart_distance

    params = [float(v) for v in args.params]
    if plane.kind == Plane.HARTMANN:
        if len(params) != 4:
            raise ParseError("hartmann orbit needs parameters: r s a b")
        sigma = family_hartmann(*params)
    else:
        if len(params) != 5:
            raise ParseError("swapping orbit needs parameters: r a b c d")
        sigma = family_swapping(params[0], MoebiusMap(*params[1:]))
    C = parse_circle(args.circle, plane)
    pts = [TorusPoint(x, C.eval(x)) for x in (s1(-1.3), s1(0.4), s1(2.9))]
    images = [apply_map(sigma, pt) for pt in pts]
    D = plane.join(*images)
    sampled = sample_circle(C, 256)
    ix, iy = apply_map_enc(sigma, sampled.xs, sampled.ys)
    with np.errstate(all="ignore"):
        forward = enc_chart_distance(D.eval_enc(ix), iy)
        backward = enc_chart_distance(D.inv_eval_enc(iy), ix)
    residual = float(np.max(np.minimum(forward, backward)))
    out.write(format_circle(D) + "\n")
    out.write(f"residual = {residual:.17g}\n")
    return 0


def _cmd_sample(plane: Plane, args, out: TextIO) -> int:
    C = parse_circle(args.circle, plane)
    n = args.n
    handle = open(args.out, "w") if args.out else out
    try:
        handle.write("theta,x,y\n")
        for k in range(n):
            theta = 2.0 * math.pi * k / n
            x = S1Point(None) if abs(theta - math.pi) < 1e-15 else S1Point(math.tan(theta / 2.0))
            y = C.eval(x)
            handle.write(f"{theta:.17g},{_fmt_s1(x)},{_fmt_s1(y)}\n")
    finally:
        if args.out:
            handle.close()
    return 0


def _cmd_dense(plane: Plane, args, out: TextIO) -> int:
    p = _point(args.coords[0], args.coords[1])
    d2 = _point(args.coords[2], args.coords[3])
    d3 = _point(args.coords[4], args.coords[5])
    region = tuple(float(v) for v in args.region)
    result = generate_dense(plane, p, d2, d3, args.depth, region)
    sys.stderr.write(f"covering_radius={result.covering_radius:.17g}\n")
    handle = open(args.out, "w") if args.out else out
    try:
        handle.write("x,y\n")
        for row in result.points:
            handle.write(f"{row[0]:.17g},{row[1]:.17g}\n")
    finally:
        if args.out:
            handle.close()
    return 0


def _cmd_k4probe(plane: Plane, args, out: TextIO) -> int:
    with open(args.spec) as handle:
        tripod, extra, n_max, tol = parse_k4_spec(handle.read())
    report = k4_probe(plane, tripod, extra, n_max=n_max, tol=tol)
    verdict = "PASS" if report.passed else "FAIL"
    out.write(f"{verdict}\n")
    out.write(f"final_minus = {report.final_minus:.17g}\n")
    out.write(f"final_plus = {report.final_plus:.17g}\n")
    return 0 if report.passed else 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="torocircle",
                     description="toroidal circle planes: construct, operate, verify")
    parser.add_argument("--config", help="plane configuration file")
    parser.add_argument("--family", help="inline family instead of a config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run the verification suites")
    p_verify.add_argument("--trials", type=int, default=None)
    p_verify.add_argument("--touch-trials", dest="touch_trials", type=int, default=None)
    p_verify.add_argument("--seed", type=int, default=None)
    p_verify.add_argument("--report", help="write a JSON report here")

    p_join = sub.add_parser("join", help="join three points")
    p_join.add_argument("coords", nargs=6, metavar="C",
                        help="x1 y1 x2 y2 x3 y3, 'inf' allowed")

    p_int = sub.add_parser("intersect", help="intersect two circles")
    p_int.add_argument("first")
    p_int.add_argument("second")

    p_touch = sub.add_parser("touch", help="touching circle through two points")
    p_touch.add_argument("circle")
    p_touch.add_argument("px")
    p_touch.add_argument("py")
    p_touch.add_argument("qx")
    p_touch.add_argument("qy")

    p_orbit = sub.add_parser("orbit", help="image of a circle under a family map")
    p_orbit.add_argument("params", nargs="+", help="family parameters")
    p_orbit.add_argument("circle")

    p_sample = sub.add_parser("sample", help="sample a circle as CSV")
    p_sample.add_argument("circle")
    p_sample.add_argument("n", type=int)
    p_sample.add_argument("--out")

    p_dense = sub.add_parser("dense", help="dense closure point set as CSV")
    p_dense.add_argument("coords", nargs=6, metavar="C",
                         help="px py d2x d2y d3x d3y")
    p_dense.add_argument("depth", type=int)
    p_dense.add_argument("region", nargs=4, metavar="R",
                         help="xmin xmax ymin ymax")
    p_dense.add_argument("--out")

    p_k4 = sub.add_parser("k4probe", help="tripod convergence probe")
    p_k4.add_argument("spec", help="sequence spec file")

    return parser


def main(argv=None, out: TextIO = None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            with open(args.config) as handle:
                config = parse_config(handle.read())
        elif args.family:
            config = parse_config(f"family = {args.family}")
        else:
            raise ParseError("a --config file or --family is required")
        plane = config.build()

        if args.command == "verify":
            return _cmd_verify(plane, config, args, out)
        if args.command == "join":
            return _cmd_join(plane, args, out)
        if args.command == "intersect":
            return _cmd_intersect(plane, args, out)
        if args.command == "touch":
            return _cmd_touch(plane, args, out)
        if args.command == "orbit":
            return _cmd_orbit(plane, args, out)
        if args.command == "sample":
            return _cmd_sample(plane, args, out)
        if args.command == "dense":
            return _cmd_dense(plane, args, out)
        if args.command == "k4probe":
            return _cmd_k4probe(plane, args, out)
        raise ParseError(f"unknown command {args.command!r}")
    except (ParseError, ConstraintError, InvalidParameter, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (JoinFailure, NoTouchingCircle) as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        if getattr(exc, "candidates", None):
            for item in exc.candidates:
                sys.stderr.write(f"  candidate: {item}\n")
        if getattr(exc, "report", None):
            for item in exc.report:
                sys.stderr.write(f"  {item}\n")
        return 3
    except GeometryError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
