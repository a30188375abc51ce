import math

import numpy as np
import pytest

from patchlab.classifier import (
    Outcome,
    Status,
    classify_drifting,
    classify_linear,
    classify_nonlinear,
    linear_core_floor,
)
from patchlab.errors import SupercriticalDriftError
from patchlab.motion import CriticalLength, Drifting, ExponentialApproach, Fixed, PowerApproach, Tabulated
from patchlab.reaction import Logistic, PiecewiseLinearKPP

DRIFT_CRIT = 2 * math.pi / math.sqrt(3)


def test_outcome_exit_codes():
    assert [o.exit_code for o in Outcome] == [0, 1, 2]


@pytest.mark.parametrize("length, outcome, rule", [
    (0.9 * math.pi, Outcome.EXTINCT, "linear-extinction"),
    (math.pi, Outcome.PERSISTS, "linear-persistence"),
    (1.25 * math.pi, Outcome.PERSISTS, "linear-persistence"),
])
def test_fixed_intervals(crit, quick_quad, length, outcome, rule):
    v = classify_linear(Fixed(length), crit, quick_quad)
    assert v.outcome is outcome
    assert v.rule == rule
    assert any("fixed-interval principal rate" in a for a in v.advisories)


def test_exponential_approach_persists_with_floor(crit, quick_quad):
    v = classify_linear(ExponentialApproach(math.pi, 0.3, 1.0), crit, quick_quad)
    assert v.outcome is Outcome.PERSISTS
    assert v.floor > 0
    assert all(c.status is Status.SATISFIED for c in v.conditions
               if c.id in ("length-bounded-above", "excess-integral-bounded-above"))


def test_exponential_approach_below_critical_goes_extinct(crit, quick_quad):
    v = classify_linear(ExponentialApproach(0.9 * math.pi, 0.3, 1.0), crit, quick_quad)
    assert v.outcome is Outcome.EXTINCT


@pytest.mark.parametrize("k, outcome", [
    (0.25, Outcome.EXTINCT),
    (0.5, Outcome.EXTINCT),
    (1.0, Outcome.EXTINCT),
    (1.5, Outcome.PERSISTS),
    (2.0, Outcome.PERSISTS),
    (3.0, Outcome.PERSISTS),
])
def test_power_dichotomy(crit, quick_quad, k, outcome):
    v = classify_linear(PowerApproach(math.pi, 0.5, k), crit, quick_quad)
    assert v.outcome is outcome


def test_tabulated_motion_uses_ledger_surrogate(crit, quick_quad):
    t = np.linspace(0.0, 400.0, 801)
    m = Tabulated(tuple(t), tuple(math.pi * (1 - 0.3 * np.exp(-t))))
    v = classify_linear(m, crit, quick_quad)
    assert {c.source for c in v.conditions} == {"ledger"}
    assert v.outcome is Outcome.PERSISTS


def test_drifting_uses_drifting_critical_length(crit, quick_quad):
    persists = Drifting(0.0, 1.0, ExponentialApproach(DRIFT_CRIT, 0.3, 1.0))
    v = classify_drifting(persists, crit, quick_quad)
    assert v.outcome is Outcome.PERSISTS
    assert v.rule == "drifting-persistence"
    # pi < L < L_crit(1): persists at rest, extinct while drifting
    extinct = Drifting(0.0, 1.0, Fixed(3.4))
    assert classify_drifting(extinct, crit, quick_quad).outcome is Outcome.EXTINCT
    assert classify_linear(Fixed(3.4), crit, quick_quad).outcome is Outcome.PERSISTS


def test_classify_linear_dispatches_drifting_motion(crit, quick_quad):
    m = Drifting(0.0, 1.0, Fixed(3.4))
    assert classify_linear(m, crit, quick_quad).rule == "drifting-extinction"


@pytest.mark.parametrize("inner", [
    Fixed(0.9 * math.pi),
    ExponentialApproach(math.pi, 0.3, 1.0),
    PowerApproach(math.pi, 0.5, 0.5),
    PowerApproach(math.pi, 0.5, 2.0),
])
def test_zero_drift_reduces_to_linear(crit, quick_quad, inner):
    drifting = classify_drifting(Drifting(0.0, 0.0, inner), crit, quick_quad)
    linear = classify_linear(inner, crit, quick_quad)
    assert drifting.outcome is linear.outcome
    assert drifting.rule == linear.rule


def test_supercritical_drift_raises(crit, quick_quad):
    with pytest.raises(SupercriticalDriftError):
        classify_drifting(Drifting(0.0, 2.5, Fixed(10.0)), crit, quick_quad)


def test_logistic_power_approach_goes_extinct(crit, quick_quad):
    m = PowerApproach(math.pi, 0.5, 2.0)
    assert classify_linear(m, crit, quick_quad).outcome is Outcome.PERSISTS
    v = classify_nonlinear(m, crit, Logistic(1.0), quick_quad)
    assert v.outcome is Outcome.EXTINCT
    assert v.rule == "nonlinear-extinction-strict-kpp"


def test_nonlinear_extinction_through_linear_problem(crit, quick_quad):
    v = classify_nonlinear(PowerApproach(math.pi, 0.5, 0.5), crit, PiecewiseLinearKPP(1.0), quick_quad)
    assert v.outcome is Outcome.EXTINCT
    assert v.rule == "nonlinear-extinction-via-linear"


def test_linear_core_persistence_and_floor_scaling(crit, quick_quad):
    m = ExponentialApproach(math.pi, 0.3, 1.0)
    full = classify_nonlinear(m, crit, PiecewiseLinearKPP(1.0, 0.25), quick_quad)
    half = classify_nonlinear(m, crit, PiecewiseLinearKPP(1.0, 0.125), quick_quad)
    assert full.outcome is Outcome.PERSISTS
    assert full.rule == "nonlinear-persistence-linear-core"
    assert full.floor > 0
    assert half.floor == pytest.approx(0.5 * full.floor, rel=1e-14)


def test_initial_constant_caps_b_hat(crit, quick_quad):
    m = ExponentialApproach(math.pi, 0.3, 1.0)
    free = classify_nonlinear(m, crit, PiecewiseLinearKPP(1.0, 0.25), quick_quad)
    capped = classify_nonlinear(m, crit, PiecewiseLinearKPP(1.0, 0.25), quick_quad, b_initial=1e-3)
    assert capped.constants["b_hat"] == 1e-3
    assert capped.floor < free.floor


def test_linear_core_floor_formula():
    constants = dict(m1=2.0, m2=4.0, M=1.0, I1=0.5, I2=2.0)
    b_hat, floor = linear_core_floor(constants, 0.25, 2.0, 1.0)
    assert b_hat == pytest.approx(0.25 * math.exp(-0.5 - 0.25))
    assert floor == pytest.approx(b_hat * math.sqrt(0.5) * math.exp(-0.5 - 0.5 - 0.25))


def test_fixed_nonlinear_interval_advisory(crit, quick_quad):
    v = classify_nonlinear(Fixed(1.5 * math.pi), crit, Logistic(1.0), quick_quad)
    assert "a positive steady state exists on this fixed interval" in v.advisories
    assert v.outcome is Outcome.INCONCLUSIVE


def test_report_lines(crit, quick_quad):
    lines = classify_linear(PowerApproach(math.pi, 0.5, 2.0), crit, quick_quad).report_lines()
    assert lines[0] == "outcome Persists"
    assert lines[1] == "rule linear-persistence"
    assert any(line.startswith("condition excess-integral-bounded-above") for line in lines)
    assert any(line.startswith("floor ") for line in lines)
