"""
Prescribed interval motion

An interval (A(t), A(t)+L(t)) moves under external control. This module
holds the motion families, the critical lengths, the extremized curvature
quantities Q-bar / Q-under and the running-integral ledger that the
envelope and classifier modules read.

USAGE:
    m = PowerApproach(L_crit=math.pi, epsilon=0.5, k=2.0)
    A, A_dot, A_ddot, L, L_dot, L_ddot = eval_motion(m, 0.0)
    ledger = accumulate_integrals(m, CriticalLength(D=1.0, f_prime_0=1.0), T=100.0)
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from .errors import (
    DomainDegeneracyError,
    LedgerError,
    MotionRangeError,
    QuadratureError,
    SupercriticalDriftError,
)
from .quadrature import QuadratureConfig, cumulative_integrals, ledger_times


class MotionState(NamedTuple):
    A: float
    A_dot: float
    A_ddot: float
    L: float
    L_dot: float
    L_ddot: float


# =============== MOTION FAMILIES ===============

class DomainMotion(ABC):
    """Base class: an evaluable pair (A(t), L(t)) with two derivatives each"""

    family: str = "abstract"

    @abstractmethod
    def _evaluate(self, t: float) -> MotionState:
        ...

    def evaluate(self, t: float) -> MotionState:
        """Evaluate A, L and their derivatives at time t >= 0"""
        if t < 0:
            raise MotionRangeError(f"Motion evaluated at negative time t={t}")
        state = self._evaluate(float(t))
        if not state.L > 0:
            raise DomainDegeneracyError(f"{self.family}: L({t}) = {state.L} is not positive")
        return state

    @property
    def initial_length(self) -> float:
        return self.evaluate(0.0).L

    def limit_length(self) -> Optional[float]:
        """Closed-form lim L(t) as t -> infinity, when the family knows it"""
        return None

    def sup_length(self) -> Optional[float]:
        """Closed-form sup of L(t) over t >= 0, when the family knows it"""
        return None

    def drift_speed(self) -> float:
        """Constant translation speed c of the interval (0 unless drifting)"""
        return 0.0

    def time_limit(self) -> Optional[float]:
        """Last time the motion is defined at, or None if it runs forever"""
        return None

    def check_positive(self, T: float, samples: int = 2001) -> None:
        """Sample L on [0, T] and raise if it is not strictly positive"""
        for t in np.linspace(0.0, T, samples):
            self.evaluate(float(t))


@dataclass(frozen=True)
class Fixed(DomainMotion):
    """Stationary interval (A0, A0 + length)"""
    length: float
    A0: float = 0.0
    family = "fixed"

    def __post_init__(self):
        if not self.length > 0:
            raise DomainDegeneracyError(f"Fixed length must be positive, got {self.length}")

    def _evaluate(self, t: float) -> MotionState:
        return MotionState(self.A0, 0.0, 0.0, self.length, 0.0, 0.0)

    def limit_length(self) -> float:
        return self.length

    def sup_length(self) -> float:
        return self.length


@dataclass(frozen=True)
class ExponentialApproach(DomainMotion):
    """L(t) = L_crit (1 - epsilon exp(-alpha t)), A = 0"""
    L_crit: float
    epsilon: float
    alpha: float
    family = "exponential"

    def __post_init__(self):
        if not self.L_crit > 0:
            raise ValueError(f"L_crit must be positive, got {self.L_crit}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def _evaluate(self, t: float) -> MotionState:
        decay = self.epsilon * math.exp(-self.alpha * t)
        L = self.L_crit * (1.0 - decay)
        L_dot = self.L_crit * self.alpha * decay
        L_ddot = -self.L_crit * self.alpha ** 2 * decay
        return MotionState(0.0, 0.0, 0.0, L, L_dot, L_ddot)

    def limit_length(self) -> float:
        return self.L_crit

    def sup_length(self) -> float:
        return self.L_crit


@dataclass(frozen=True)
class PowerApproach(DomainMotion):
    """L(t) = L_crit (1 - epsilon (1+t)^(-k)), A = 0"""
    L_crit: float
    epsilon: float
    k: float
    family = "power"

    def __post_init__(self):
        if not self.L_crit > 0:
            raise ValueError(f"L_crit must be positive, got {self.L_crit}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")

    def _evaluate(self, t: float) -> MotionState:
        s = 1.0 + t
        decay = self.epsilon * s ** (-self.k)
        L = self.L_crit * (1.0 - decay)
        L_dot = self.L_crit * self.k * decay / s
        L_ddot = -self.L_crit * self.k * (self.k + 1.0) * decay / (s * s)
        return MotionState(0.0, 0.0, 0.0, L, L_dot, L_ddot)

    def limit_length(self) -> float:
        return self.L_crit

    def sup_length(self) -> float:
        return self.L_crit


@dataclass(frozen=True)
class Drifting(DomainMotion):
    """Interval (A0 + c t + A_inner(t), ... + L_inner(t)) translating at speed c"""
    A0: float
    c: float
    inner: DomainMotion
    family = "drifting"

    def _evaluate(self, t: float) -> MotionState:
        s = self.inner.evaluate(t)
        return MotionState(
            self.A0 + self.c * t + s.A, self.c + s.A_dot, s.A_ddot, s.L, s.L_dot, s.L_ddot
        )

    def limit_length(self) -> Optional[float]:
        return self.inner.limit_length()

    def sup_length(self) -> Optional[float]:
        return self.inner.sup_length()

    def drift_speed(self) -> float:
        return self.c + self.inner.drift_speed()

    def time_limit(self) -> Optional[float]:
        return self.inner.time_limit()


@dataclass(frozen=True)
class Tabulated(DomainMotion):
    """L(t) from samples, interpolated by a natural cubic spline; A = 0"""
    t: Tuple[float, ...]
    L: Tuple[float, ...]
    family = "tabulated"
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        L = np.asarray(self.L, dtype=float)
        if t.ndim != 1 or t.shape != L.shape:
            raise ValueError("Tabulated motion needs matching 1-D t and L columns")
        if t.size < 4:
            raise ValueError(f"Tabulated motion needs at least 4 samples, got {t.size}")
        if np.any(np.diff(t) <= 0):
            raise ValueError("Tabulated times must be strictly increasing")
        if t[0] != 0.0:
            raise MotionRangeError(f"Tabulated motion must start at t=0, starts at {t[0]}")
        if np.any(L <= 0):
            raise DomainDegeneracyError("Tabulated lengths must all be positive")
        object.__setattr__(self, "t", tuple(t))
        object.__setattr__(self, "L", tuple(L))
        object.__setattr__(self, "_spline", CubicSpline(t, L, bc_type="natural"))
        err = self.derivative_consistency()
        if err >= 1e-6:
            raise ValueError(f"Spline derivatives inconsistent with its values (rel. error {err:.2e})")

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        """Load a two-column CSV (t, L) with a header row"""
        frame = pd.read_csv(Path(path))
        if frame.shape[1] < 2:
            raise ValueError(f"{path}: expected two columns t, L")
        return cls(tuple(frame.iloc[:, 0]), tuple(frame.iloc[:, 1]))

    @property
    def t_max(self) -> float:
        return self.t[-1]

    def time_limit(self) -> float:
        return self.t_max

    def _evaluate(self, t: float) -> MotionState:
        if t > self.t_max * (1.0 + 1e-12):
            raise MotionRangeError(f"t={t} outside tabulated range [0, {self.t_max}]")
        t = min(t, self.t_max)
        s = self._spline
        return MotionState(0.0, 0.0, 0.0, float(s(t)), float(s(t, 1)), float(s(t, 2)))

    def derivative_consistency(self) -> float:
        """Largest relative mismatch between spline derivatives and central
        differences of spline values, at interior sample midpoints"""
        t = np.asarray(self.t)
        mids = 0.5 * (t[:-1] + t[1:])
        h = 1e-3 * float(np.min(np.diff(t)))
        span = t[-1] - t[0]
        L_scale = float(np.max(np.abs(self.L)))
        s = self._spline
        worst = 0.0
        for order in (1, 2):
            exact = s(mids, order)
            approx = (s(mids + h, order - 1) - s(mids - h, order - 1)) / (2.0 * h)
            scale = max(float(np.max(np.abs(exact))), L_scale / span ** order)
            denom = np.maximum(np.abs(exact), 1e-3 * scale)
            worst = max(worst, float(np.max(np.abs(exact - approx) / denom)))
        return worst

    def sup_length(self) -> float:
        grid = np.linspace(0.0, self.t_max, 20 * len(self.t))
        return float(np.max(self._spline(grid)))


@dataclass(frozen=True)
class Custom(DomainMotion):
    """User evaluator t -> (A, A_dot, A_ddot, L, L_dot, L_ddot)"""
    evaluator: Callable[[float], Tuple[float, float, float, float, float, float]]
    name: str = "custom"
    family = "custom"

    def _evaluate(self, t: float) -> MotionState:
        return MotionState(*(float(v) for v in self.evaluator(t)))


def eval_motion(m: DomainMotion, t: float) -> MotionState:
    """(A, A_dot, A_ddot, L, L_dot, L_ddot) at time t"""
    return m.evaluate(t)


# =============== CRITICAL LENGTH ===============

@dataclass(frozen=True)
class CriticalLength:
    """pi * sqrt(D / (f'(0) - c^2 / 4D)); the c = 0 case is the fixed-interval length"""
    D: float
    f_prime_0: float
    c: float = 0.0

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"Diffusivity D must be positive, got {self.D}")
        if not self.f_prime_0 > 0:
            raise ValueError(f"f'(0) must be positive, got {self.f_prime_0}")
        if self.effective_rate <= 0:
            raise SupercriticalDriftError(
                f"|c| = {abs(self.c)} >= 2 sqrt(D f'(0)) = {self.max_drift}; "
                "no critical length exists"
            )

    @property
    def effective_rate(self) -> float:
        return self.f_prime_0 - self.c ** 2 / (4.0 * self.D)

    @property
    def max_drift(self) -> float:
        return 2.0 * math.sqrt(self.D * self.f_prime_0)

    @property
    def value(self) -> float:
        return math.pi * math.sqrt(self.D / self.effective_rate)

    def with_drift(self, c: float) -> "CriticalLength":
        return CriticalLength(self.D, self.f_prime_0, c)


# =============== Q BOUNDS ===============

def q_bounds_from_coefficients(a_term: float, l_term: float) -> Tuple[float, float]:
    """Max and negated min over eta in [0,1] of g(eta) = eta^2 l_term/2 + eta a_term

    Args:
        a_term: A_ddot * L
        l_term: L_ddot * L

    Returns:
        (Q_bar, Q_under), both >= 0 since g(0) = 0.
    """
    candidates = [0.0, 0.5 * l_term + a_term]
    if l_term != 0.0:
        vertex = -a_term / l_term
        if 0.0 < vertex < 1.0:
            candidates.append(0.5 * l_term * vertex * vertex + a_term * vertex)
    return max(candidates), -min(candidates)


def q_bounds(m: DomainMotion, t: float) -> Tuple[float, float]:
    """(Q_bar(t), Q_under(t)) for a motion"""
    s = m.evaluate(t)
    return q_bounds_from_coefficients(s.A_ddot * s.L, s.L_ddot * s.L)


# =============== INTEGRAL LEDGER ===============

EXCESS = "excess_inverse_square"    # int (1/L^2 - 1/L_crit^2)
NEG_CURVATURE = "negative_curvature"  # int L [L_ddot]^-
POS_CURVATURE = "positive_curvature"  # int L [L_ddot]^+
Q_LOWER = "q_lower"                 # int Q_under / 2D
Q_UPPER = "q_upper"                 # int Q_bar / 2D
DIFFUSION = "diffusion_decay"       # int D pi^2 / L^2
LOG_STRETCH = "log_stretch"         # int L_dot / 2L
DRIFT_PENALTY = "drift_penalty"     # int A_dot^2 / 4D
DRIFT_EXCESS = "drift_excess"       # int (A_dot^2 - c^2) / 4D

LEDGER_COLUMNS = (
    EXCESS, NEG_CURVATURE, POS_CURVATURE, Q_LOWER, Q_UPPER,
    DIFFUSION, LOG_STRETCH, DRIFT_PENALTY, DRIFT_EXCESS,
)


@dataclass(frozen=True)
class IntegralLedger:
    """Running integrals of the motion, sampled on a time grid"""
    times: np.ndarray
    columns: Dict[str, np.ndarray]
    states: Dict[str, np.ndarray]
    crit: CriticalLength
    log_stretch_error: float

    @property
    def D(self) -> float:
        return self.crit.D

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def L0(self) -> float:
        return float(self.states["L"][0])

    def index_of(self, t: float) -> int:
        i = int(np.searchsorted(self.times, t))
        for j in (i - 1, i):
            if 0 <= j < self.times.size and math.isclose(self.times[j], t, rel_tol=1e-12, abs_tol=1e-12):
                return j
        raise LedgerError(f"Time {t} is not on the ledger grid (horizon {self.horizon})")

    def value(self, name: str, t: float) -> float:
        return float(self.columns[name][self.index_of(t)])

    def at(self, t: float) -> Dict[str, float]:
        i = self.index_of(t)
        return {name: float(col[i]) for name, col in self.columns.items()}

    @property
    def final(self) -> Dict[str, float]:
        return {name: float(col[-1]) for name, col in self.columns.items()}

    def growth_exponent(self) -> np.ndarray:
        """f'(0) t - int A_dot^2/4D - int D pi^2/L^2, in cancellation-free form"""
        return -self.D * math.pi ** 2 * self.columns[EXCESS] - self.columns[DRIFT_EXCESS]

    def lower_exponent(self) -> np.ndarray:
        return self.growth_exponent() - self.columns[Q_LOWER]

    def upper_exponent(self) -> np.ndarray:
        return self.growth_exponent() + self.columns[Q_UPPER]

    def persistence_exponent(self) -> np.ndarray:
        """int (D pi^2/L_crit^2 - D pi^2/L^2 - L [L_ddot]^- / 4D)"""
        return -self.D * math.pi ** 2 * self.columns[EXCESS] - self.columns[NEG_CURVATURE] / (4.0 * self.D)

    def extinction_integral(self) -> np.ndarray:
        """int (D pi^2/L^2 - D pi^2/L_crit^2 - L [L_ddot]^+ / 4D + L_dot / 2L)"""
        return (
            self.D * math.pi ** 2 * self.columns[EXCESS]
            - self.columns[POS_CURVATURE] / (4.0 * self.D)
            + self.columns[LOG_STRETCH]
        )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"t": self.times})
        for name in LEDGER_COLUMNS:
            frame[name] = self.columns[name]
        return frame


def _ledger_integrand(m: DomainMotion, crit: CriticalLength) -> Callable[[float], np.ndarray]:
    D = crit.D
    inv_crit_sq = 1.0 / crit.value ** 2
    c_sq = crit.c ** 2

    def integrand(t: float) -> np.ndarray:
        s = m.evaluate(t)
        q_bar, q_under = q_bounds_from_coefficients(s.A_ddot * s.L, s.L_ddot * s.L)
        curvature = s.L * s.L_ddot
        return np.array([
            1.0 / s.L ** 2 - inv_crit_sq,
            max(-curvature, 0.0),
            max(curvature, 0.0),
            q_under / (2.0 * D),
            q_bar / (2.0 * D),
            D * math.pi ** 2 / s.L ** 2,
            s.L_dot / (2.0 * s.L),
            s.A_dot ** 2 / (4.0 * D),
            (s.A_dot ** 2 - c_sq) / (4.0 * D),
        ])

    return integrand


def accumulate_integrals(
    m: DomainMotion,
    crit: CriticalLength,
    T: float,
    quad: QuadratureConfig = QuadratureConfig(),
    times: Optional[np.ndarray] = None,
) -> IntegralLedger:
    """Running integrals of the motion on [0, T]

    Args:
        m: the motion
        crit: critical length (carries D, f'(0) and the reference drift c)
        T: horizon
        quad: quadrature settings
        times: explicit grid (must start at 0 and end at T); default ledger_times

    Returns:
        IntegralLedger whose log_stretch column has been cross-checked
        against 0.5 log(L(T)/L(0)).
    """
    if not T > 0:
        raise ValueError(f"Ledger horizon must be positive, got {T}")
    if times is None:
        times = ledger_times(T, quad)
    else:
        times = np.asarray(times, dtype=float)
        if times[0] != 0.0 or not math.isclose(times[-1], T):
            raise ValueError("Ledger grid must start at 0 and end at T")

    values = cumulative_integrals(_ledger_integrand(m, crit), times, quad.tol)
    columns = {name: values[:, i] for i, name in enumerate(LEDGER_COLUMNS)}

    samples = [m.evaluate(float(t)) for t in times]
    states = {name: np.array([getattr(s, name) for s in samples]) for name in MotionState._fields}

    closed_form = 0.5 * np.log(states["L"] / states["L"][0])
    error = float(np.max(np.abs(columns[LOG_STRETCH] - closed_form)))
    if error > 1e-6:
        raise QuadratureError("Ledger log-stretch integral disagrees with 0.5 log(L(T)/L(0))", error)

    return IntegralLedger(times, columns, states, crit, error)
