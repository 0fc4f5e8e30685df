"""Risk-aware signal temporal logic: semantics, risk measures, DR-VaR
tightening and MILP-based receding-horizon control."""

from ._core import (
    Formula,
    StlRiskError,
    drvar_violation_prob,
    eval_risk,
    parse,
    plan,
    robustness,
    run_experiment,
    satisfies,
    stl_risk,
    tighten,
)

__all__ = [
    "Formula",
    "StlRiskError",
    "drvar_violation_prob",
    "eval_risk",
    "parse",
    "plan",
    "robustness",
    "run_experiment",
    "satisfies",
    "stl_risk",
    "tighten",
]
