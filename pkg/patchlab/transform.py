"""
Changes of variables

Spatial pullback onto the fixed reference interval [0, L0],
    xi = (x - A(t)) L0 / L(t),
and the gauge map u -> w that removes the first-order term of the
transformed equation:
    w = u (L/L0)^(1/2) exp(-f'(0) t + int A_dot^2/4D)
          exp(xi^2 L_dot L / (4 D L0^2) + xi A_dot L / (2 D L0)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DomainError, GaugeConsistencyError
from .motion import DomainMotion
from .quadrature import QuadratureConfig, cumulative_integrals
from .solver import Field

# Relative slack for positions that round just outside the interval
EDGE_SLACK = 1e-12


def to_reference(x, m: DomainMotion, t: float, L0: float):
    """Physical position(s) x -> reference coordinate xi in [0, L0]"""
    s = m.evaluate(t)
    x_arr = np.asarray(x, dtype=float)
    slack = EDGE_SLACK * max(s.L, abs(s.A), 1.0)
    if np.any(x_arr < s.A - slack) or np.any(x_arr > s.A + s.L + slack):
        raise DomainError(f"x outside the interval [{s.A}, {s.A + s.L}] at t={t}")
    xi = np.clip((x_arr - s.A) * L0 / s.L, 0.0, L0)
    return xi if xi.ndim else float(xi)


def from_reference(xi, m: DomainMotion, t: float, L0: float):
    """Reference coordinate xi -> physical position x"""
    s = m.evaluate(t)
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < -EDGE_SLACK * L0) or np.any(xi_arr > L0 * (1.0 + EDGE_SLACK)):
        raise DomainError(f"xi outside [0, {L0}]")
    x = s.A + xi_arr * s.L / L0
    return x if x.ndim else float(x)


def pullback(field: Field, m: DomainMotion) -> Tuple[np.ndarray, np.ndarray]:
    """(x, psi) on the physical interval at the field's time"""
    return from_reference(field.xi, m, field.t, field.L0), field.values.copy()


# =============== GAUGE ===============

@dataclass(frozen=True)
class GaugeFactors:
    """Multiplicative factors taking u to w at time t on a xi-grid"""
    t: float
    xi: np.ndarray
    volume: np.ndarray
    growth: np.ndarray
    quadratic: np.ndarray
    log_total: np.ndarray

    def __post_init__(self):
        for name in ("volume", "growth", "quadratic"):
            values = getattr(self, name)
            if not np.all(np.isfinite(values)) or np.any(values <= 0):
                raise GaugeConsistencyError(f"Gauge {name} factor not positive and finite at t={self.t}")

    @property
    def total(self) -> np.ndarray:
        return np.exp(self.log_total)


def drift_integral(m: DomainMotion, D: float, t: float, tol: float = 1e-10) -> float:
    """int_0^t A_dot^2 / 4D"""
    if t == 0:
        return 0.0
    values = cumulative_integrals(
        lambda z: np.array([m.evaluate(z).A_dot ** 2 / (4.0 * D)]), np.array([0.0, t]), tol
    )
    return float(values[-1, 0])


def gauge_factors(
    m: DomainMotion,
    slope: float,
    D: float,
    t: float,
    xi: np.ndarray,
    L0: float,
    drift: Optional[float] = None,
    quad: QuadratureConfig = QuadratureConfig(),
) -> GaugeFactors:
    """Evaluate the u -> w factors at time t

    Args:
        m: motion
        slope: f'(0)
        D: diffusivity
        t: time
        xi: reference grid
        L0: reference length
        drift: int_0^t A_dot^2/4D if already known (e.g. from a ledger)
        quad: quadrature settings for computing `drift` when not given
    """
    s = m.evaluate(t)
    xi = np.asarray(xi, dtype=float)
    if drift is None:
        drift = drift_integral(m, D, t, quad.tol)
    log_volume = 0.5 * math.log(s.L / L0)
    log_growth = -slope * t + drift
    log_quadratic = (
        xi ** 2 * s.L_dot * s.L / (4.0 * D * L0 ** 2) + xi * s.A_dot * s.L / (2.0 * D * L0)
    )
    ones = np.ones_like(xi)
    return GaugeFactors(
        t=float(t),
        xi=xi,
        volume=ones * math.exp(log_volume),
        growth=ones * math.exp(log_growth),
        quadratic=np.exp(log_quadratic),
        log_total=log_volume + log_growth + log_quadratic,
    )


def _check_match(field: Field, t: float, gauge: GaugeFactors) -> None:
    if not (math.isclose(field.t, t, rel_tol=1e-12, abs_tol=1e-12)
            and math.isclose(gauge.t, t, rel_tol=1e-12, abs_tol=1e-12)):
        raise GaugeConsistencyError(f"Field at t={field.t}, gauge at t={gauge.t}, requested t={t}")
    if gauge.xi.shape != field.values.shape or not np.allclose(gauge.xi, field.xi, rtol=0, atol=1e-12):
        raise GaugeConsistencyError("Gauge factors were evaluated on a different grid")


def u_to_w(u: Field, m: DomainMotion, t: float, gauge: GaugeFactors) -> Field:
    """Gauge-transformed field w(xi, t)"""
    _check_match(u, t, gauge)
    return u.with_values(u.values * gauge.total)


def w_to_u(w: Field, m: DomainMotion, t: float, gauge: GaugeFactors) -> Field:
    """Inverse of u_to_w"""
    _check_match(w, t, gauge)
    return w.with_values(w.values * np.exp(-gauge.log_total))


def w_equation_residual(
    w_before: Field, w_now: Field, w_after: Field, m: DomainMotion, D: float
) -> np.ndarray:
    """Interior residual of the w-equation from three equally spaced snapshots

        w_t - D (L0/L)^2 w_xixi - (xi^2 L_ddot L/(4 D L0^2) + xi A_ddot L/(2 D L0)) w
    """
    dt_back = w_now.t - w_before.t
    dt_fwd = w_after.t - w_now.t
    if not math.isclose(dt_back, dt_fwd, rel_tol=1e-9):
        raise GaugeConsistencyError("Snapshots must be equally spaced in time")
    s = m.evaluate(w_now.t)
    L0, h, xi = w_now.L0, w_now.h, w_now.xi
    w = w_now.values
    w_t = (w_after.values - w_before.values) / (dt_back + dt_fwd)
    w_xx = np.zeros_like(w)
    w_xx[1:-1] = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / h ** 2
    potential = xi ** 2 * s.L_ddot * s.L / (4.0 * D * L0 ** 2) + xi * s.A_ddot * s.L / (2.0 * D * L0)
    residual = w_t - D * (L0 / s.L) ** 2 * w_xx - potential * w
    return residual[1:-1]
