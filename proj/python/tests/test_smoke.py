import json
import math
import os
from pathlib import Path

import pytest

import edskit
from edskit import spin

FIXTURES = Path(os.environ.get("EDSKIT_FIXTURES", Path(__file__).resolve().parents[2] / "fixtures"))


def test_builtin_spin_is_variational():
    rep = edskit.check_variational(samples=50)
    assert rep["verdict"] == "pass"
    assert rep["convention"] == "averaged"
    assert max(c["max"] for c in rep["conditions"].values()) < 1e-8


def test_model_documents():
    good = edskit.load_model_file(str(FIXTURES / "spin.json"))
    assert good.q == 3
    assert edskit.check_variational(good, samples=30)["verdict"] == "pass"
    bad = edskit.load_model_file(str(FIXTURES / "skew_b.json"))
    rep = edskit.check_variational(bad, samples=10)
    assert rep["failing"] == ["H2"]
    with pytest.raises(edskit.SchemaError):
        edskit.load_model('{"q": 2}')


def test_random_lagrangian_conventions():
    assert edskit.check_random_lagrangian(2, 3, samples=20)["verdict"] == "pass"


def test_symmetry_reports():
    rot = edskit.check_symmetry(rotation=[0, 0, 1], samples=20)
    assert rot["verdict"] == "pass"
    assert rot["convention"] == "i"
    assert rot["max_residual"] < 1e-6
    non = edskit.check_symmetry(generator=FIXTURES / "nonsymmetry.json", samples=10)
    assert non["verdict"] == "fail"
    assert non["max_residual"] > 1e-2
    survey = edskit.invariance_survey(samples=20, seed=3)
    assert survey["passing"] == ["i"]


def test_spin_functions():
    e1, e2, e3 = [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]
    assert spin.star3([0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]) == [1, 0, 0, 0]
    assert spin.star3(e1, e2, e3) == [0, 0, 0, -1]
    assert spin.reduce_check(samples=50) < 1e-8
    u = [1.0, 0.3, -0.2, 0.1]
    e = spin.e4(u, [0.1, 0.2, 0.3, 0.4], [0.5, -0.1, 0.2, 0.0])
    assert abs(sum(a * b for a, b in zip(e, u))) < 1e-12 * max(map(abs, e))
    value, real = spin.rest_mass([0.2, 0.5, 0.8, -0.3])
    assert real and abs(value) < 1e-12
    with pytest.raises(edskit.ConfigurationError):
        spin.e4(u, u, u, metric="minkowski")


def test_integrate_straight_line():
    tr = spin.integrate([0, 0, 0], [0.3, -0.1, 0.2], [0, 0, 0], dt=0.01, steps=100)
    assert tr["completed"]
    assert len(tr["t"]) == 101
    assert max(abs(c) for row in tr["vp"] for c in row) < 1e-12
    vp = spin.project_initial([0.3, -0.1, 0.2], [0.3, 0.1, -0.2])
    vpp = spin.solve_vpp([0.3, -0.1, 0.2], vp)
    assert max(map(abs, spin.e3([0.3, -0.1, 0.2], vp, vpp))) < 1e-10


def test_expressions():
    assert edskit.parse("-2^2") == "((-2)^2)"
    p = edskit.JetPoint(0.5, [1.0, 2.0], [0.1, 0.2], [0, 0], [0, 0], params=[3.0])
    value, grad = edskit.evaluate("k*x1*x2 + t", p, ["k"])
    assert value == pytest.approx(6.5)
    assert grad[:3] == pytest.approx([1.0, 6.0, 3.0])
    assert grad[-1] == pytest.approx(2.0)
    with pytest.raises(edskit.ParseError) as err:
        edskit.parse("foo(x1)")
    assert "unknown function" in str(err.value)
    rng = edskit.SplitMix64(1)
    first = rng.next()
    assert first == edskit.SplitMix64(1).next()
    assert 0.0 <= edskit.SplitMix64(1).uniform() < 1.0


def test_cli_in_process():
    code, out, err = edskit.cli(["reduce-check", "--samples", "20"])
    assert code == 0
    assert json.loads(out)["verdict"] == "pass"
    code, _, _ = edskit.cli(["check-variational", str(FIXTURES / "missing.json")])
    assert code == 2
