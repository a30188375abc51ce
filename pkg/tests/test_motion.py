import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from patchlab.errors import DomainDegeneracyError, LedgerError, MotionRangeError, SupercriticalDriftError
from patchlab.motion import (
    DRIFT_EXCESS,
    EXCESS,
    LOG_STRETCH,
    NEG_CURVATURE,
    CriticalLength,
    Custom,
    Drifting,
    ExponentialApproach,
    Fixed,
    PowerApproach,
    Tabulated,
    accumulate_integrals,
    eval_motion,
    q_bounds,
    q_bounds_from_coefficients,
)

FAMILIES = [
    Fixed(0.9 * math.pi),
    ExponentialApproach(math.pi, 0.3, 1.0),
    PowerApproach(math.pi, 0.5, 2.0),
    PowerApproach(math.pi, 0.5, 0.5),
    Drifting(0.0, 1.0, ExponentialApproach(2 * math.pi / math.sqrt(3), 0.3, 1.0)),
]


def _central(m, t, h=1e-5):
    plus, minus = m.evaluate(t + h), m.evaluate(t - h)
    return (plus.L - minus.L) / (2 * h), (plus.L_dot - minus.L_dot) / (2 * h), (plus.A - minus.A) / (2 * h)


@pytest.mark.parametrize("m", FAMILIES, ids=lambda m: m.family)
def test_derivatives_match_finite_differences(m):
    for t in (0.5, 2.0, 7.0):
        L_dot, L_ddot, A_dot = _central(m, t)
        s = eval_motion(m, t)
        assert s.L_dot == pytest.approx(L_dot, rel=1e-6, abs=1e-9)
        assert s.L_ddot == pytest.approx(L_ddot, rel=1e-5, abs=1e-8)
        assert s.A_dot == pytest.approx(A_dot, rel=1e-6, abs=1e-9)


def test_exponential_closed_form():
    m = ExponentialApproach(math.pi, 0.3, 1.0)
    s = m.evaluate(1.0)
    assert s.L == pytest.approx(math.pi * (1 - 0.3 * math.exp(-1.0)), rel=1e-15)
    assert m.initial_length == pytest.approx(0.7 * math.pi)
    assert m.limit_length() == math.pi


def test_power_closed_form_at_zero():
    s = PowerApproach(math.pi, 0.5, 2.0).evaluate(0.0)
    assert s.L == pytest.approx(0.5 * math.pi)
    assert s.L_dot == pytest.approx(math.pi)
    assert s.L_ddot == pytest.approx(-3.0 * math.pi)


def test_drifting_translates_left_end():
    m = Drifting(1.0, 0.5, Fixed(2.0))
    s = m.evaluate(4.0)
    assert (s.A, s.A_dot, s.L) == (3.0, 0.5, 2.0)
    assert m.drift_speed() == 0.5


def test_negative_time_rejected():
    with pytest.raises(MotionRangeError):
        Fixed(1.0).evaluate(-1.0)


def test_degenerate_length_rejected():
    with pytest.raises(DomainDegeneracyError):
        Fixed(0.0)
    m = Custom(lambda t: (0.0, 0.0, 0.0, 1.0 - t, -1.0, 0.0))
    m.evaluate(0.5)
    with pytest.raises(DomainDegeneracyError):
        m.evaluate(1.0)


@pytest.mark.parametrize("kwargs", [dict(epsilon=1.2), dict(epsilon=0.0), dict(alpha=-1.0)])
def test_exponential_parameter_ranges(kwargs):
    params = dict(L_crit=math.pi, epsilon=0.3, alpha=1.0)
    params.update(kwargs)
    with pytest.raises(ValueError):
        ExponentialApproach(**params)


def test_tabulated_from_csv_and_range(tmp_path):
    t = np.linspace(0.0, 10.0, 41)
    L = math.pi * (1 - 0.3 * np.exp(-t))
    path = tmp_path / "motion.csv"
    pd.DataFrame({"t": t, "L": L}).to_csv(path, index=False)
    m = Tabulated.from_csv(path)
    assert m.t_max == 10.0
    assert m.evaluate(5.0).L == pytest.approx(math.pi * (1 - 0.3 * math.exp(-5.0)), rel=1e-4)
    with pytest.raises(MotionRangeError):
        m.evaluate(11.0)


def test_tabulated_needs_four_samples():
    with pytest.raises(ValueError):
        Tabulated((0.0, 1.0, 2.0), (1.0, 1.0, 1.0))


# =============== CRITICAL LENGTH ===============

def test_critical_length_values():
    assert CriticalLength(1.0, 1.0).value == pytest.approx(math.pi)
    assert CriticalLength(1.0, 1.0, 1.0).value == pytest.approx(2 * math.pi / math.sqrt(3))
    assert CriticalLength(2.0, 0.5).value == pytest.approx(2 * math.pi)


def test_supercritical_drift_rejected():
    with pytest.raises(SupercriticalDriftError):
        CriticalLength(1.0, 1.0, 2.0)


# =============== Q BOUNDS ===============

@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_q_bounds_match_brute_force(a_term, l_term):
    eta = np.linspace(0.0, 1.0, 200001)
    g = 0.5 * l_term * eta ** 2 + a_term * eta
    q_bar, q_under = q_bounds_from_coefficients(a_term, l_term)
    # the grid misses the vertex by at most 2.5e-6, so g is off by at most |l| 3.2e-12
    assert q_bar == pytest.approx(float(g.max()), abs=1e-9)
    assert q_under == pytest.approx(float(-g.min()), abs=1e-9)
    assert q_bar >= 0 and q_under >= 0


def test_q_bounds_interior_vertex():
    # g = eta^2 (-2)/2 + eta = eta - eta^2, max 1/4 at eta = 1/2
    q_bar, q_under = q_bounds_from_coefficients(1.0, -2.0)
    assert q_bar == pytest.approx(0.25)
    assert q_under == 0.0


def test_q_bounds_of_motion():
    m = ExponentialApproach(math.pi, 0.3, 1.0)
    s = m.evaluate(1.0)
    q_bar, q_under = q_bounds(m, 1.0)
    assert q_bar == 0.0
    assert q_under == pytest.approx(-0.5 * s.L_ddot * s.L)


# =============== LEDGER ===============

@pytest.mark.parametrize("m", FAMILIES, ids=lambda m: m.family)
def test_log_stretch_matches_closed_form(m, crit, quick_quad):
    c = m.drift_speed()
    ledger = accumulate_integrals(m, crit.with_drift(c), 200.0, quick_quad)
    expected = 0.5 * math.log(m.evaluate(200.0).L / m.initial_length)
    assert ledger.final[LOG_STRETCH] == pytest.approx(expected, abs=1e-7)
    assert ledger.log_stretch_error < 1e-6


def test_excess_integral_against_scipy_quad(crit):
    m = ExponentialApproach(math.pi, 0.3, 1.0)
    times = np.array([0.0, 1.0, 5.0, 20.0])
    ledger = accumulate_integrals(m, crit, 20.0, times=times)
    for i, t in enumerate(times):
        exact, _ = quad(lambda s: 1 / m.evaluate(s).L ** 2 - 1 / math.pi ** 2, 0, t, epsabs=1e-13)
        assert ledger.columns[EXCESS][i] == pytest.approx(exact, abs=1e-9)


def test_drift_excess_zero_for_drifting_motion():
    m = Drifting(0.0, 1.0, Fixed(4.0))
    crit_c = CriticalLength(1.0, 1.0, 1.0)
    ledger = accumulate_integrals(m, crit_c, 50.0, times=np.linspace(0, 50, 11))
    np.testing.assert_allclose(ledger.columns[DRIFT_EXCESS], 0.0, atol=1e-12)


def test_ledger_exponent_identities(crit, quick_quad):
    m = PowerApproach(math.pi, 0.5, 2.0)
    ledger = accumulate_integrals(m, crit, 100.0, quick_quad)
    D = crit.D
    np.testing.assert_allclose(
        ledger.persistence_exponent(),
        -D * math.pi ** 2 * ledger.columns[EXCESS] - ledger.columns[NEG_CURVATURE] / (4 * D),
    )
    assert np.all(ledger.lower_exponent() <= ledger.upper_exponent())


def test_ledger_lookup(crit):
    ledger = accumulate_integrals(Fixed(math.pi), crit, 10.0, times=np.array([0.0, 5.0, 10.0]))
    assert ledger.index_of(5.0) == 1
    assert ledger.value(EXCESS, 10.0) == pytest.approx(0.0, abs=1e-14)
    frame = ledger.to_frame()
    assert list(frame["t"]) == [0.0, 5.0, 10.0]
    with pytest.raises(LedgerError):
        ledger.index_of(7.0)


def test_ledger_grid_must_span_horizon(crit):
    with pytest.raises(ValueError):
        accumulate_integrals(Fixed(1.0), crit, 10.0, times=np.array([0.0, 5.0]))
