import io
import json
import math

import pytest

from torocircle import Plane, TorusPoint, circle_equal, s1
from torocircle.cli import main, parse_circle, parse_config, parse_k4_spec
from torocircle.errors import ConstraintError, ParseError


def run(argv):
    buf = io.StringIO()
    code = main(argv, out=buf)
    return code, buf.getvalue()


def test_parse_config_classical():
    config = parse_config("family = classical")
    assert config.family == "classical"
    assert config.seed == 42
    assert config.build().kind == Plane.CLASSICAL


def test_parse_config_hartmann_inline_commas():
    config = parse_config("family = hartmann, r1 = 2, s1 = 0.5, r2 = 1, s2 = 3")
    assert config.parameters == {"r1": 2.0, "s1": 0.5, "r2": 1.0, "s2": 3.0}
    plane = config.build()
    assert plane.params == (2.0, 0.5, 1.0, 3.0)


def test_parse_config_section_and_lines():
    text = """
    [plane]
    family = swapping
    d = 2
    s = 0.7
    seed = 9
    tol_join = 1e-6
    """
    config = parse_config(text)
    assert config.family == "swapping"
    assert config.seed == 9
    assert config.build().tol.join_iterative == 1e-6


def test_parse_config_errors():
    with pytest.raises(ConstraintError):
        parse_config("family = hartmann, r1 = -1")
    with pytest.raises(ParseError):
        parse_config("family = classical, bogus = 3")
    with pytest.raises(ParseError):
        parse_config("family = classical, d = 2")  # family mismatch
    with pytest.raises(ParseError):
        parse_config("r1 = 2")  # missing family


def test_join_command():
    code, out = run(["--family", "classical", "join", "0", "0", "1", "1", "inf", "inf"])
    assert code == 0
    assert out.strip() == "moebius:1,0,0,1"


def test_join_command_usage_error():
    code, _ = run(["--family", "classical", "join", "0", "0"])
    assert code == 1


def test_join_parallel_is_solver_error():
    code, _ = run(["--family", "classical", "join", "0", "0", "0", "1", "2", "3"])
    assert code == 1  # ParallelInput is input validation


def test_sample_command():
    code, out = run(["--family", "hartmann", "sample", "line:1,0", "4"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "theta,x,y"
    assert len(lines) == 5
    theta, x, y = lines[2].split(",")
    assert x == y
    inf_row = lines[3].split(",")
    assert inf_row[1] == "inf" and inf_row[2] == "inf"


def test_sample_roundtrip_rejoin():
    plane = Plane.hartmann(1.0, 1.0, 1.0, 1.0)
    code, out = run(["--family", "hartmann", "sample", "hyp:1,0.5,-1,pos", "16"])
    assert code == 0
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    pts = [TorusPoint(s1(x), s1(y)) for _, x, y in rows]
    finite = [p for p in pts if not p.x.is_inf and not p.y.is_inf]
    rejoined = plane.join(finite[0], finite[5], finite[10])
    original = parse_circle("hyp:1,0.5,-1,pos", plane)
    assert circle_equal(rejoined, original, plane)


def test_intersect_command():
    code, out = run(["--family", "classical", "intersect",
                     "moebius:1,0,0,1", "moebius:2,0,0,1"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "secant"
    assert len(lines) == 3


def test_touch_command():
    code, out = run(["--family", "classical", "touch",
                     "moebius:1,0,0,1", "0", "0", "inf", "1"])
    assert code == 0
    assert out.strip() == "moebius:1,0,1,1"


def test_orbit_command():
    code, out = run(["--family", "hartmann", "orbit", "2", "3", "1", "0", "line:1,0"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "line:1.5,-1.5"
    assert float(lines[1].split("=")[1]) <= 1e-9


def test_verify_command_exit_codes(tmp_path):
    report_path = tmp_path / "report.json"
    code, out = run(["--family", "classical", "verify", "--trials", "25",
                     "--touch-trials", "5", "--report", str(report_path)])
    assert code == 0
    assert "verdict = pass" in out
    data = json.loads(report_path.read_text())
    assert [entry["name"] for entry in data] == [
        "joining", "two_point_bound", "touching", "rigidity"]
    for entry in data:
        assert entry["verdict"] == "pass"
        assert entry["seed"] == 42


def test_dense_command(tmp_path):
    out_path = tmp_path / "dense.csv"
    code, _ = run(["--family", "classical", "dense",
                   "inf", "inf", "0", "0", "1", "1", "1",
                   "0", "1", "0", "1", "--out", str(out_path)])
    assert code == 0
    rows = out_path.read_text().strip().splitlines()
    assert rows[0] == "x,y"
    assert len(rows) > 4


def test_k4probe_command(tmp_path):
    spec = tmp_path / "tripod.cfg"
    spec.write_text("""
    [p1]
    x = 0, y = 0, dx = 0.1, dy = 0.08, power = 1.5
    [p2]
    x = 0, y = 1, dx = -0.08, dy = 0.05, power = 1.5
    [p3]
    x = 1, y = 3, dx = 0.05, dy = -0.08, power = 1.5
    [p]
    x = 2, y = -1, dx = 0.08, dy = 0.1, power = 1.5
    [probe]
    n_max = 400, tol = 1e-3
    """)
    code, out = run(["--family", "classical", "k4probe", str(spec)])
    assert code == 0
    assert out.splitlines()[0] == "PASS"


def test_k4_spec_parser_errors(tmp_path):
    with pytest.raises(ParseError):
        parse_k4_spec("x = 0")  # keys outside any section
    with pytest.raises(ParseError):
        parse_k4_spec("[p1]\nx = 0, y = 0\n[p2]\nx=0, y=1\n[p]\nx=2, y=3")


def test_config_file_flow(tmp_path):
    cfg = tmp_path / "plane.cfg"
    cfg.write_text("[plane]\nfamily = hartmann\nr1 = 2\ns1 = 0.5\nr2 = 1\ns2 = 3\n")
    code, out = run(["--config", str(cfg), "join", "0", "1", "2", "3", "inf", "2"])
    assert code == 0
    assert out.startswith("hyp:")


def test_missing_plane_is_usage_error():
    code, _ = run(["join", "0", "0", "1", "1", "inf", "inf"])
    assert code == 1
