import json

import numpy as np
import pytest

from torocircle import (
    InvalidTrials,
    Plane,
    verify_joining,
    verify_rigidity,
    verify_touching,
    verify_two_point_bound,
)


def test_invalid_trials():
    plane = Plane.classical()
    for suite in (verify_joining, verify_two_point_bound, verify_touching,
                  verify_rigidity):
        with pytest.raises(InvalidTrials):
            suite(plane, trials=0)


def test_joining_classical_passes():
    report = verify_joining(Plane.classical(), trials=200, seed=42)
    assert report.passed
    assert report.max_residual <= 1e-7
    assert report.trials == 200 and report.seed == 42


def test_joining_hartmann_passes():
    report = verify_joining(Plane.hartmann(2.0, 0.5, 1.0, 3.0), trials=200, seed=42)
    assert report.passed


def test_joining_random_swapping_parameters():
    rng = np.random.default_rng(77)
    for _ in range(20):
        d, s = np.exp(rng.uniform(np.log(0.2), np.log(5.0), size=2))
        plane = Plane.swapping_semi(float(d), float(s))
        report = verify_joining(plane, trials=60, seed=int(rng.integers(1 << 30)))
        assert report.passed, (d, s, report.failures[:2])


def test_two_point_bound_passes():
    report = verify_two_point_bound(Plane.classical(), trials=150, seed=42)
    assert report.passed


def test_touching_random_hartmann_parameters():
    rng = np.random.default_rng(88)
    for _ in range(20):
        params = np.exp(rng.uniform(np.log(0.3), np.log(3.0), size=4))
        plane = Plane.hartmann(*(float(v) for v in params))
        report = verify_touching(plane, trials=25, seed=int(rng.integers(1 << 30)))
        assert report.passed, (params, report.failures[:2])


def test_touching_uniqueness_agreement():
    report = verify_touching(Plane.hartmann(1.0, 1.0, 1.0, 1.0), trials=40, seed=42)
    assert report.passed


def test_rigidity_passes():
    for plane in (Plane.classical(), Plane.hartmann(2.0, 0.5, 1.0, 3.0),
                  Plane.swapping_semi(2.0, 1.0)):
        report = verify_rigidity(plane, trials=300, seed=42)
        assert report.passed


def test_reports_are_reproducible():
    plane = Plane.hartmann(2.0, 0.5, 1.0, 3.0)
    first = verify_joining(plane, trials=120, seed=7)
    second = verify_joining(plane, trials=120, seed=7)
    assert json.dumps(first.to_dict(), sort_keys=True) == \
        json.dumps(second.to_dict(), sort_keys=True)
    assert first.to_text() == second.to_text()
    third = verify_joining(plane, trials=120, seed=8)
    assert third.seed != first.seed


def test_report_serialization_shape():
    report = verify_two_point_bound(Plane.classical(), trials=30, seed=5)
    data = report.to_dict()
    assert set(data) >= {"name", "trials", "failures", "max_residual",
                         "verdict", "seed"}
    text = report.to_text()
    assert "verdict = pass" in text
    assert "seed = 5" in text
