import math

import numpy as np
import pytest

import stlrisk

PREDS = {"pi1": ([1.0, 0.0], -0.5), "pi2": ([0.0, 1.0], 0.0), "pi3": ([1.0, 1.0], -1.0)}


def test_parse_and_horizon():
    f = stlrisk.parse("pi1 U[3,5] (pi2 and not pi3)", PREDS)
    assert f.horizon == 5
    assert stlrisk.parse(str(f)) == f
    with pytest.raises(stlrisk.StlRiskError):
        stlrisk.parse("x0 >= 1 and")


def test_single_run_risk_is_minus_robustness():
    f = stlrisk.parse("G[0,2] (x0 >= 0.5) or F[1,3] (x1 <= 0)")
    rng = np.random.default_rng(0)
    for _ in range(20):
        run = rng.uniform(-1, 1, size=(4, 2))
        rob = stlrisk.robustness(run, f)
        assert stlrisk.stl_risk([run], f, "cvar:0.3") == -rob
        if rob != 0:
            assert stlrisk.satisfies(run, f) == (rob > 0)


def test_risk_measures():
    assert stlrisk.eval_risk("cvar:0.5", [1, 2, 3, 4]) == pytest.approx(3.5)
    assert stlrisk.eval_risk("var:0.2", list(range(1, 11))) == 8
    assert stlrisk.drvar_violation_prob(-3.0, 1.0) == pytest.approx(0.1)


def test_tighten_signs_and_margins():
    f = stlrisk.parse("pi1 U[3,5] (pi2 and not pi3)", PREDS)
    g, rows = stlrisk.tighten(f, np.eye(2), np.eye(2), 0.01 * np.eye(2), delta=0.2)
    assert g.horizon == 5
    assert {r[0]: r[1] for r in rows} == {"pi1": "-", "pi2": "-", "pi3": "+"}
    for name, _, t, _, margin in rows:
        scale = 2.0 if name == "pi3" else 1.0
        assert margin == pytest.approx(2.0 * math.sqrt(0.01 * t * scale))


def test_plan_reaches_target():
    f = stlrisk.parse("F[2,3] (x0 >= 1) and G[0,3] (x0 <= 2)")
    A = np.array([[1.0, 0.5], [0.0, 1.0]])
    B = np.array([[0.125], [0.5]])
    out = stlrisk.plan(f, A, B, np.zeros(2), np.array([2.0]))
    assert out["status"] == "optimal"
    states = np.array(out["states"])
    assert stlrisk.robustness(states, f) >= -1e-7


def test_small_experiment():
    t1, t2 = stlrisk.run_experiment(runs=2, seed=3, threads=1)
    assert t1["runs"] == 2 and t2["runs"] == 2
    assert t1["mode"] == "nominal" and t2["mode"] == "tightened"
