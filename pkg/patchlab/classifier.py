"""
Long-time classification: persistence vs extinction

Sufficient conditions only. Each rule lists its conditions; a rule fires
when every one of them is satisfied, and anything short of that is
Inconclusive. Analytic families (Fixed, ExponentialApproach,
PowerApproach and Drifting wrappers of them) are decided in closed form;
Tabulated and Custom motions fall back to the interval-doubling surrogate
on the motion ledger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .envelope import persistence_floor
from .motion import (
    EXCESS,
    NEG_CURVATURE,
    CriticalLength,
    DomainMotion,
    Drifting,
    ExponentialApproach,
    Fixed,
    IntegralLedger,
    PowerApproach,
    Tabulated,
    accumulate_integrals,
)
from .quadrature import QuadratureConfig, Trend, doubling_trend
from .reaction import ReactionTerm

# Relative tolerance for "L_inf equals L_crit"
LENGTH_MATCH_RTOL = 1e-9


class Outcome(str, Enum):
    PERSISTS = "Persists"
    EXTINCT = "Extinct"
    INCONCLUSIVE = "Inconclusive"

    @property
    def exit_code(self) -> int:
        return {"Persists": 0, "Extinct": 1, "Inconclusive": 2}[self.value]


class Status(str, Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ConditionCheck:
    id: str
    status: Status
    source: str                     # "analytic" or "ledger"
    values: Dict[str, float] = field(default_factory=dict)

    def line(self) -> str:
        witness = ", ".join(f"{k}={v:.6g}" for k, v in self.values.items())
        return f"{self.id:<36} {self.status.value:<10} {self.source:<8} {witness}"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    rule: str
    conditions: Tuple[ConditionCheck, ...]
    floor: Optional[float] = None
    constants: Dict[str, float] = field(default_factory=dict)
    advisories: Tuple[str, ...] = ()

    def report_lines(self) -> List[str]:
        lines = [f"outcome {self.outcome.value}", f"rule {self.rule}"]
        lines += [f"condition {c.line()}" for c in self.conditions]
        if self.floor is not None:
            lines.append(f"floor {self.floor:.17g}")
        lines += [f"constant {k} {v:.17g}" for k, v in self.constants.items()]
        lines += [f"advisory {a}" for a in self.advisories]
        return lines


def _check(name: str, ok: Optional[bool], source: str, **values) -> ConditionCheck:
    status = Status.UNKNOWN if ok is None else (Status.SATISFIED if ok else Status.VIOLATED)
    return ConditionCheck(name, status, source, {k: float(v) for k, v in values.items()})


def _from_trend(trend: Trend, bounded_means: bool) -> Optional[bool]:
    """Map a doubling-test trend to satisfied/violated/unknown"""
    if trend is Trend.UNDETERMINED:
        return None
    return (trend is Trend.BOUNDED) == bounded_means


def _all_satisfied(checks: List[ConditionCheck]) -> bool:
    return all(c.status is Status.SATISFIED for c in checks)


# =============== MOTION ANALYSIS ===============

def _base_family(m: DomainMotion) -> DomainMotion:
    """Innermost motion of a Drifting wrapper chain"""
    while isinstance(m, Drifting):
        m = m.inner
    return m


def _compare_length(L_inf: float, crit_value: float) -> int:
    """-1, 0, +1 for L_inf below, at, above the critical length"""
    if math.isclose(L_inf, crit_value, rel_tol=LENGTH_MATCH_RTOL):
        return 0
    return -1 if L_inf < crit_value else 1


def _ledger_horizon(m: DomainMotion, quad: QuadratureConfig) -> float:
    base = _base_family(m)
    if isinstance(base, Tabulated):
        return min(quad.horizon, base.t_max)
    return quad.horizon


def motion_ledger(m: DomainMotion, crit: CriticalLength, quad: QuadratureConfig) -> IntegralLedger:
    return accumulate_integrals(m, crit, _ledger_horizon(m, quad), quad)


class _Surrogate:
    """Doubling-test reads of a ledger"""

    def __init__(self, ledger: IntegralLedger, quad: QuadratureConfig):
        self.ledger = ledger
        self.quad = quad
        self.half = ledger.times <= 0.5 * ledger.horizon * (1.0 + 1e-12)

    def running_max(self, values: np.ndarray) -> Tuple[float, float]:
        return float(np.max(values[self.half])), float(np.max(values))

    def bounded_above(self, values: np.ndarray) -> Tuple[Optional[bool], float, float]:
        half, full = self.running_max(values)
        return _from_trend(doubling_trend(half, full, self.quad), True), half, full

    def diverges(self, values: np.ndarray) -> Tuple[Optional[bool], float, float]:
        half = float(values[self.half][-1])
        full = float(values[-1])
        return _from_trend(doubling_trend(half, full, self.quad), False), half, full


def _stretch(ledger: IntegralLedger) -> np.ndarray:
    return ledger.states["L_dot"] * ledger.states["L"]


def _persistence_checks(m: DomainMotion, crit: CriticalLength, ledger: IntegralLedger,
                        quad: QuadratureConfig, drift: float) -> List[ConditionCheck]:
    base = _base_family(m)
    Lc = crit.value
    stretch = _stretch(ledger)
    sup_stretch = float(np.max(stretch))
    excess = ledger.columns[EXCESS]
    neg = ledger.columns[NEG_CURVATURE]
    checks = []

    if isinstance(base, (Fixed, ExponentialApproach, PowerApproach)):
        L_inf = base.limit_length()
        side = _compare_length(L_inf, Lc)
        if isinstance(base, PowerApproach):
            excess_ok = side > 0 or (side == 0 and base.k > 1)
        else:
            excess_ok = side >= 0
        checks.append(_check("length-bounded-above", True, "analytic", sup_L=base.sup_length()))
        checks.append(_check("stretch-rate-bounded-above", True, "analytic", sup_on_ledger=sup_stretch))
        checks.append(_check("excess-integral-bounded-above", excess_ok, "analytic",
                             L_limit=L_inf, L_crit=Lc, value_at_T=excess[-1]))
        checks.append(_check("negative-curvature-integrable", True, "analytic", value_at_T=neg[-1]))
        if drift != 0.0:
            checks.append(_check("drift-length-bounded-above", True, "analytic", sup=drift * base.sup_length()))
        return checks

    s = _Surrogate(ledger, quad)
    ok, half, full = s.bounded_above(ledger.states["L"])
    checks.append(_check("length-bounded-above", ok, "ledger", sup_half=half, sup_full=full))
    ok, half, full = s.bounded_above(stretch)
    checks.append(_check("stretch-rate-bounded-above", ok, "ledger", sup_half=half, sup_full=full))
    ok, half, full = s.bounded_above(excess)
    checks.append(_check("excess-integral-bounded-above", ok, "ledger", sup_half=half, sup_full=full))
    ok, half, full = s.diverges(neg)
    checks.append(_check("negative-curvature-integrable", None if ok is None else not ok, "ledger",
                         value_half=half, value_full=full))
    if drift != 0.0:
        ok, half, full = s.bounded_above(drift * ledger.states["L"])
        checks.append(_check("drift-length-bounded-above", ok, "ledger", sup_half=half, sup_full=full))
    return checks


def _extinction_checks(m: DomainMotion, crit: CriticalLength, ledger: IntegralLedger,
                       quad: QuadratureConfig, drift: float) -> List[ConditionCheck]:
    base = _base_family(m)
    Lc = crit.value
    stretch = _stretch(ledger)
    integral = ledger.extinction_integral()
    checks = []

    if isinstance(base, (Fixed, ExponentialApproach, PowerApproach)):
        L_inf = base.limit_length()
        side = _compare_length(L_inf, Lc)
        if isinstance(base, PowerApproach):
            diverges = side < 0 or (side == 0 and base.k <= 1)
        else:
            diverges = side < 0
        checks.append(_check("stretch-rate-bounded-below", True, "analytic",
                             inf_on_ledger=float(np.min(stretch))))
        checks.append(_check("extinction-integral-diverges", diverges, "analytic",
                             L_limit=L_inf, L_crit=Lc, value_at_T=integral[-1]))
        if drift != 0.0:
            inf_L = float(np.min(ledger.states["L"]))
            checks.append(_check("drift-length-bounded-below", True, "analytic", inf=drift * inf_L))
        return checks

    s = _Surrogate(ledger, quad)
    ok, half, full = s.bounded_above(-stretch)
    checks.append(_check("stretch-rate-bounded-below", ok, "ledger", inf_half=-half, inf_full=-full))
    ok, half, full = s.diverges(integral)
    checks.append(_check("extinction-integral-diverges", ok, "ledger", value_half=half, value_full=full))
    if drift != 0.0:
        ok, half, full = s.bounded_above(-drift * ledger.states["L"])
        checks.append(_check("drift-length-bounded-below", ok, "ledger", inf_half=-half, inf_full=-full))
    return checks


def _fixed_advisory(m: DomainMotion, crit: CriticalLength) -> Tuple[str, ...]:
    base = _base_family(m)
    if not isinstance(base, Fixed):
        return ()
    rate = crit.effective_rate - crit.D * math.pi ** 2 / base.length ** 2
    trend = "growth" if rate > 0 else ("decay" if rate < 0 else "neutral mode")
    return (f"fixed-interval principal rate {rate:.6g} ({trend})",)


def _classify(m: DomainMotion, crit: CriticalLength, quad: QuadratureConfig,
              drift: float, labels: Tuple[str, str]) -> Verdict:
    ledger = motion_ledger(m, crit, quad)
    persist = _persistence_checks(m, crit, ledger, quad, drift)
    extinct = _extinction_checks(m, crit, ledger, quad, drift)
    conditions = tuple(persist + extinct)
    advisories = _fixed_advisory(m, crit)

    if _all_satisfied(persist):
        floor = persistence_floor(m, crit, 1.0, ledger, quad)
        notes = advisories if floor.stable else advisories + ("persistence floor did not stabilize",)
        return Verdict(Outcome.PERSISTS, labels[0], conditions, floor.B,
                       {"floor_half": floor.B_half, "floor_full": floor.B_full}, notes)
    if _all_satisfied(extinct):
        return Verdict(Outcome.EXTINCT, labels[1], conditions, advisories=advisories)
    return Verdict(Outcome.INCONCLUSIVE, "none", conditions, advisories=advisories)


def classify_linear(m: DomainMotion, crit: CriticalLength, quad: QuadratureConfig = QuadratureConfig()) -> Verdict:
    """Persistence/extinction of the linear problem on a non-translating interval"""
    if m.drift_speed() != 0.0:
        return classify_drifting(m, crit, quad)
    if crit.c != 0.0:
        crit = crit.with_drift(0.0)
    return _classify(m, crit, quad, 0.0, ("linear-persistence", "linear-extinction"))


def classify_drifting(m: DomainMotion, crit: CriticalLength, quad: QuadratureConfig = QuadratureConfig()) -> Verdict:
    """Same rules with L_crit replaced by the drifting critical length L_crit(c)

    Raises:
        SupercriticalDriftError: |c| >= 2 sqrt(D f'(0))
    """
    c = m.drift_speed()
    if c == 0.0:
        return classify_linear(m, crit, quad)
    crit_c = crit.with_drift(c)
    return _classify(m, crit_c, quad, c, ("drifting-persistence", "drifting-extinction"))


# =============== NONLINEAR ===============

def _core_constants(m: DomainMotion, crit: CriticalLength, ledger: IntegralLedger,
                    quad: QuadratureConfig) -> Tuple[List[ConditionCheck], Dict[str, float]]:
    """Bounds m1 <= L <= m2, |L_dot L| <= M, |D pi^2 int (1/L^2 - 1/L_crit^2)| <= I1,
    int L [L_ddot]^- <= I2, with their condition checks"""
    base = _base_family(m)
    D, Lc = crit.D, crit.value
    L = ledger.states["L"]
    stretch = np.abs(_stretch(ledger))
    excess = np.abs(D * math.pi ** 2 * ledger.columns[EXCESS])
    neg = ledger.columns[NEG_CURVATURE]
    constants = {
        "m1": float(np.min(L)),
        "m2": float(np.max(L)),
        "M": float(np.max(stretch)),
        "I1": float(np.max(excess)),
        "I2": float(neg[-1]),
    }

    if isinstance(base, ExponentialApproach):
        eps, alpha, Lm = base.epsilon, base.alpha, base.L_crit
        s_peak = min(eps, 0.5)
        constants.update(
            m1=Lm * (1.0 - eps),
            m2=Lm,
            M=Lm ** 2 * alpha * s_peak * (1.0 - s_peak),
            I2=Lm ** 2 * alpha * (eps - eps ** 2 / 2.0),
        )
        at_crit = _compare_length(Lm, Lc) == 0
        if at_crit:
            constants["I1"] = D * math.pi ** 2 / (alpha * Lm ** 2) * (eps / (1.0 - eps) - math.log(1.0 - eps))
        excess_ok = at_crit
    elif isinstance(base, PowerApproach):
        excess_ok = _compare_length(base.L_crit, Lc) == 0 and base.k > 1
    elif isinstance(base, Fixed):
        excess_ok = _compare_length(base.length, Lc) == 0
    else:
        excess_ok = None

    if excess_ok is not None:
        checks = [
            _check("length-bounded-below", True, "analytic", m1=constants["m1"]),
            _check("length-bounded-above", True, "analytic", m2=constants["m2"]),
            _check("stretch-rate-bounded", True, "analytic", M=constants["M"]),
            _check("excess-integral-bounded", excess_ok, "analytic", I1=constants["I1"]),
            _check("negative-curvature-integrable", True, "analytic", I2=constants["I2"]),
        ]
        return checks, constants

    s = _Surrogate(ledger, quad)
    checks = []
    ok, half, full = s.bounded_above(-L)
    checks.append(_check("length-bounded-below", None if ok is None else ok and constants["m1"] > 0,
                         "ledger", inf_half=-half, inf_full=-full))
    for name, values, key in (
        ("length-bounded-above", L, "m2"),
        ("stretch-rate-bounded", stretch, "M"),
        ("excess-integral-bounded", excess, "I1"),
    ):
        ok, half, full = s.bounded_above(values)
        checks.append(_check(name, ok, "ledger", **{f"{key}_half": half, f"{key}_full": full}))
    ok, half, full = s.diverges(neg)
    checks.append(_check("negative-curvature-integrable", None if ok is None else not ok, "ledger",
                         I2_half=half, I2_full=full))
    return checks, constants


def linear_core_floor(constants: Dict[str, float], k0: float, L0: float, D: float,
                      b_initial: Optional[float] = None) -> Tuple[float, float]:
    """(b_hat, floor) of the k0-capped subsolution

        b_hat (L0/m1)^(1/2) exp(I1 + M/4D) <= k0
        u >= b_hat (L0/m2)^(1/2) exp(-I1 - I2/4D - M/4D) sin(pi xi / L0)
    """
    m1, m2, M, I1, I2 = (constants[k] for k in ("m1", "m2", "M", "I1", "I2"))
    b_hat = k0 * math.sqrt(m1 / L0) * math.exp(-I1 - M / (4.0 * D))
    if b_initial is not None:
        b_hat = min(b_hat, b_initial)
    floor = b_hat * math.sqrt(L0 / m2) * math.exp(-I1 - I2 / (4.0 * D) - M / (4.0 * D))
    return b_hat, floor


def _limsup_length(m: DomainMotion, ledger: IntegralLedger) -> Tuple[float, str]:
    limit = _base_family(m).limit_length()
    if limit is not None:
        return limit, "analytic"
    tail = ledger.times >= 0.5 * ledger.horizon
    return float(np.max(ledger.states["L"][tail])), "ledger"


def classify_nonlinear(
    m: DomainMotion,
    crit: CriticalLength,
    r: ReactionTerm,
    quad: QuadratureConfig = QuadratureConfig(),
    b_initial: Optional[float] = None,
) -> Verdict:
    """Classification for a KPP reaction

    Rules, in order: extinction of the linear supersolution; persistence
    through the linear core k0 (stationary left end only); extinction for a
    strict KPP term once limsup L <= L_crit.

    Args:
        b_initial: sandwich constant b of the initial data; caps b_hat when given
    """
    c = m.drift_speed()
    crit = crit.with_drift(c)
    ledger = motion_ledger(m, crit, quad)
    conditions: List[ConditionCheck] = []
    advisories = list(_fixed_advisory(m, crit))

    extinct = _extinction_checks(m, crit, ledger, quad, c)
    conditions += extinct
    if _all_satisfied(extinct):
        return Verdict(Outcome.EXTINCT, "nonlinear-extinction-via-linear", tuple(conditions),
                       advisories=tuple(advisories))

    stationary = c == 0.0 and bool(np.all(ledger.states["A_dot"] == 0.0))
    base = _base_family(m)
    if isinstance(base, Fixed) and _compare_length(base.length, crit.value) > 0:
        advisories.append("a positive steady state exists on this fixed interval")

    if r.linear_core is not None and stationary:
        core, constants = _core_constants(m, crit, ledger, quad)
        conditions += core
        if _all_satisfied(core):
            b_hat, floor = linear_core_floor(constants, r.linear_core, ledger.L0, crit.D, b_initial)
            constants.update(b_hat=b_hat, k0=r.linear_core)
            return Verdict(Outcome.PERSISTS, "nonlinear-persistence-linear-core", tuple(conditions),
                           floor, constants, tuple(advisories))

    if r.strict and stationary:
        limsup, source = _limsup_length(m, ledger)
        ok = limsup <= crit.value * (1.0 + LENGTH_MATCH_RTOL)
        conditions.append(_check("limsup-length-at-most-critical", ok, source,
                                 limsup=limsup, L_crit=crit.value))
        if ok:
            return Verdict(Outcome.EXTINCT, "nonlinear-extinction-strict-kpp", tuple(conditions),
                           advisories=tuple(advisories))

    return Verdict(Outcome.INCONCLUSIVE, "none", tuple(conditions), advisories=tuple(advisories))
