"""
Sub- and supersolution envelopes for the linear problem

For a sandwich b sin(pi xi/L0) <= w(xi, t0) <= a sin(pi xi/L0) of the
gauge-transformed field, the solution of the linear problem satisfies

    lower <= u(xi, t) <= upper,
    lower = b sin(pi xi/L0) (L0/L)^(1/2) exp(E_lower(t) - G(xi, t)),
    upper = a sin(pi xi/L0) (L0/L)^(1/2) exp(E_upper(t) - G(xi, t)),

with G the quadratic gauge exponent and E_lower / E_upper read from the
motion ledger. Everything here is evaluated from the ledger alone; no PDE
is solved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import LedgerError
from .motion import (
    Q_LOWER,
    Q_UPPER,
    CriticalLength,
    DomainMotion,
    IntegralLedger,
    accumulate_integrals,
    q_bounds_from_coefficients,
)
from .quadrature import QuadratureConfig
from .solver import Field, Trajectory

# log of a value safely below the largest float
MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class EnvelopeBounds:
    t: float
    xi: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lower_exponent: float
    upper_exponent: float
    a: float
    b: float
    origin: float = 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": np.full(self.xi.size, self.t),
            "xi": self.xi,
            "lower": self.lower,
            "upper": self.upper,
        })


def _gauge_exponent(D: float, L0: float, xi: np.ndarray, L: float, L_dot: float, A_dot: float) -> np.ndarray:
    return xi ** 2 * L_dot * L / (4.0 * D * L0 ** 2) + xi * A_dot * L / (2.0 * D * L0)


def _sine(xi: np.ndarray, L0: float) -> np.ndarray:
    s = np.sin(math.pi * xi / L0)
    s[(xi <= 0.0) | (xi >= L0)] = 0.0
    return s


def _ledger_for(m: DomainMotion, crit: CriticalLength, times, quad: QuadratureConfig) -> IntegralLedger:
    grid = np.unique(np.concatenate(([0.0], np.atleast_1d(np.asarray(times, dtype=float)))))
    return accumulate_integrals(m, crit, float(grid[-1]), quad, times=grid)


def theorem_bounds(
    m: DomainMotion,
    crit: CriticalLength,
    a: float,
    b: float,
    t: float,
    xi: np.ndarray,
    ledger: Optional[IntegralLedger] = None,
    origin: float = 0.0,
    quad: QuadratureConfig = QuadratureConfig(),
) -> EnvelopeBounds:
    """Lower and upper envelope curves at time t

    Args:
        m: motion
        crit: critical length (D, f'(0), reference drift)
        a, b: sandwich constants at `origin`, 0 <= b <= a
        t: evaluation time, t >= origin
        xi: reference grid on [0, L0]
        ledger: motion ledger containing both `origin` and `t`; built on
            demand when omitted
        origin: restart time t0. For t0 > 0, a and b must come from
            initial_constants on the field at t0

    Returns:
        EnvelopeBounds; exponents are differences of ledger values between
        origin and t.
    """
    if not (0.0 <= b <= a) or not a > 0:
        raise ValueError(f"Sandwich constants must satisfy 0 <= b <= a, a > 0; got a={a}, b={b}")
    if t < origin:
        raise ValueError(f"Envelope time t={t} precedes its origin {origin}")
    xi = np.asarray(xi, dtype=float)
    L0 = m.initial_length
    D = crit.D

    if t == 0.0:
        lower_exp = upper_exp = 0.0
    else:
        if ledger is None:
            ledger = _ledger_for(m, crit, [origin, t], quad)
        elif ledger.crit != crit:
            raise LedgerError("Ledger was accumulated for a different critical length")
        i, j = ledger.index_of(origin), ledger.index_of(t)
        growth = ledger.growth_exponent()
        lower_exp = float(growth[j] - growth[i] - (ledger.columns[Q_LOWER][j] - ledger.columns[Q_LOWER][i]))
        upper_exp = float(growth[j] - growth[i] + (ledger.columns[Q_UPPER][j] - ledger.columns[Q_UPPER][i]))

    s = m.evaluate(t)
    shape = _sine(xi, L0) * math.sqrt(L0 / s.L)
    gauge = _gauge_exponent(D, L0, xi, s.L, s.L_dot, s.A_dot)
    return EnvelopeBounds(
        t=float(t),
        xi=xi,
        lower=b * shape * np.exp(lower_exp - gauge),
        upper=a * shape * np.exp(upper_exp - gauge),
        lower_exponent=lower_exp,
        upper_exponent=upper_exp,
        a=float(a),
        b=float(b),
        origin=float(origin),
    )


def initial_constants(u: Field, m: DomainMotion, D: float) -> Tuple[float, float]:
    """(a, b) with b sin <= wbar <= a sin at the field's time

    wbar = u (L/L0)^(1/2) exp(G) is the gauge transform without its purely
    time-dependent factor, which the envelope exponents account for. The
    ratio wbar / sin is taken at interior nodes; at the two nodes next to
    the boundary it is replaced by its boundary limit from one-sided
    differences.
    """
    s = m.evaluate(u.t)
    L0, h, xi = u.L0, u.h, u.xi
    wbar = u.values * math.sqrt(s.L / L0) * np.exp(_gauge_exponent(D, L0, xi, s.L, s.L_dot, s.A_dot))
    ratio = wbar[2:-2] / np.sin(math.pi * xi[2:-2] / L0)
    left = (4.0 * wbar[1] - wbar[2]) / (2.0 * h) * L0 / math.pi
    right = (4.0 * wbar[-2] - wbar[-3]) / (2.0 * h) * L0 / math.pi
    candidates = np.concatenate((ratio, [left, right]))
    return float(np.max(candidates)), max(float(np.min(candidates)), 0.0)


def envelope_series(traj: Trajectory, origin: float = 0.0) -> List[EnvelopeBounds]:
    """Envelopes at every output time of a trajectory from `origin` on

    The sandwich constants are measured from the simulated field at origin.
    """
    if traj.ledger is None:
        raise LedgerError("Trajectory has no ledger (fewer than two snapshots)")
    s = traj.scenario
    start = traj.at(origin)
    if not math.isclose(start.t, origin, rel_tol=1e-12, abs_tol=1e-12):
        raise LedgerError(f"Origin {origin} is not an output time of the trajectory")
    a, b = initial_constants(start, s.motion, s.D)
    crit = traj.ledger.crit
    return [
        theorem_bounds(s.motion, crit, a, b, f.t, f.xi, traj.ledger, start.t)
        for f in traj.fields if f.t >= start.t
    ]


def sandwich_violation(traj: Trajectory, bounds: List[EnvelopeBounds]) -> pd.DataFrame:
    """Per-time violation of lower <= u <= upper, relative to sup |u|

    Columns: t, below (max of lower - u), above (max of u - upper), sup_norm,
    relative (largest of below and above divided by sup_norm).
    """
    rows = []
    for env in bounds:
        f = traj.at(env.t)
        below = float(np.max(env.lower - f.values))
        above = float(np.max(f.values - env.upper))
        sup = f.sup_norm()
        worst = max(below, above, 0.0)
        rows.append({
            "t": env.t,
            "below": below,
            "above": above,
            "sup_norm": sup,
            "relative": worst / sup if sup > 0 else worst,
        })
    return pd.DataFrame(rows, columns=["t", "below", "above", "sup_norm", "relative"])


# =============== PERSISTENCE FLOOR ===============

@dataclass(frozen=True)
class PersistenceFloor:
    """B with u >= B sin(pi xi/L0) for all t, from the ledger grid

    `stable` is False when the running infimum still moved by more than
    floor_rtol between T/2 and T; B is then reported as 0.
    """
    B: float
    stable: bool
    B_half: float
    B_full: float
    t_min: float
    horizon: float


def _log_gauge_floor(D: float, L: float, L_dot: float, A_dot: float) -> float:
    """min over xi in [0, L0] of -G(xi, t)"""
    top, _ = q_bounds_from_coefficients(A_dot * L / (2.0 * D), L_dot * L / (2.0 * D))
    return -top


def floor_profile(ledger: IntegralLedger, b: float = 1.0) -> np.ndarray:
    """b (L0/L)^(1/2) exp(E_lower(t)) min_xi exp(-G) on the ledger grid"""
    st = ledger.states
    if b <= 0:
        return np.zeros_like(st["L"])
    log_gauge = np.array([
        _log_gauge_floor(ledger.D, L, L_dot, A_dot)
        for L, L_dot, A_dot in zip(st["L"], st["L_dot"], st["A_dot"])
    ])
    exponent = math.log(b) + 0.5 * np.log(ledger.L0 / st["L"]) + ledger.lower_exponent() + log_gauge
    # Capped below the float overflow point; the minimum is unaffected
    return np.exp(np.minimum(exponent, MAX_EXPONENT))


def persistence_floor(
    m: DomainMotion,
    crit: CriticalLength,
    b: float,
    ledger: Optional[IntegralLedger] = None,
    quad: QuadratureConfig = QuadratureConfig(),
) -> PersistenceFloor:
    """Infimum over t of the lower envelope's sine coefficient

    When A is constant this is b inf_t (L0/L)^(1/2) exp(int (D pi^2/L_crit^2
    - D pi^2/L^2 - L [L_ddot]^- / 4D)) min_xi exp(-G).
    """
    if ledger is None:
        ledger = accumulate_integrals(m, crit, quad.horizon, quad)
    values = floor_profile(ledger, b)
    T = ledger.horizon
    half = ledger.times <= 0.5 * T * (1.0 + 1e-12)
    B_half = float(np.min(values[half]))
    B_full = float(np.min(values))
    t_min = float(ledger.times[int(np.argmin(values))])
    stable = B_full > 0 and (B_half - B_full) <= quad.floor_rtol * B_half
    return PersistenceFloor(B_full if stable else 0.0, stable, B_half, B_full, t_min, T)

