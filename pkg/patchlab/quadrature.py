"""
Adaptive quadrature for running time integrals

The motion ledger needs several integrals of smooth functions of time, at
every time of an output grid. Each grid segment is integrated with scipy's
adaptive vector quadrature (all integrands at once) and the segment values
are accumulated.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.integrate import quad_vec

from .errors import QuadratureError


@dataclass(frozen=True)
class QuadratureConfig:
    """Numerical knobs for ledgers and for the divergence surrogate

    Args:
        tol: absolute tolerance per ledger segment
        horizon: T_max used by the doubling test and by floor stabilization
        margin: relative growth (T_max/2 -> T_max) that counts as divergence
        abs_growth: absolute growth that must also be exceeded for divergence
        bounded_tol: growth below this counts as bounded
        floor_rtol: relative drift of a running infimum/supremum between
            T_max/2 and T_max tolerated before it is declared unstable
        segments: number of geometric segments after the fine start window
        start_window: length of the uniformly resolved initial window
        start_points: number of uniform segments in the start window
    """
    tol: float = 1e-10
    horizon: float = 1e4
    margin: float = 0.10
    abs_growth: float = 1.0
    bounded_tol: float = 1e-2
    floor_rtol: float = 1e-2
    segments: int = 400
    start_window: float = 20.0
    start_points: int = 400

    def __post_init__(self):
        if self.tol <= 0 or self.horizon <= 0:
            raise ValueError("tol and horizon must be positive")
        if self.segments < 2 or self.start_points < 2:
            raise ValueError("segments and start_points must be at least 2")


class Trend(str, Enum):
    """Outcome of the interval-doubling test"""
    DIVERGENT = "divergent"
    BOUNDED = "bounded"
    UNDETERMINED = "undetermined"


def ledger_times(T: float, config: QuadratureConfig = QuadratureConfig()) -> np.ndarray:
    """Time grid for a ledger on [0, T]: uniform start window, geometric tail

    The grid always contains T/2 so the doubling test reads exact values.
    """
    if T <= 0:
        raise ValueError(f"Horizon must be positive, got {T}")
    window = min(T, config.start_window)
    times = np.linspace(0.0, window, config.start_points + 1)
    if T > window:
        tail = np.geomspace(window, T, config.segments + 1)
        times = np.concatenate([times, tail[1:]])
    times = np.union1d(times, [0.5 * T])
    times[-1] = T
    return times


def cumulative_integrals(
    integrand: Callable[[float], np.ndarray],
    times: np.ndarray,
    tol: float = 1e-10,
) -> np.ndarray:
    """Running integrals of a vector-valued integrand over a time grid

    Args:
        integrand: t -> 1-D array of integrand values
        times: increasing grid starting at the lower limit
        tol: absolute tolerance per segment

    Returns:
        Array of shape (len(times), n_integrands); row 0 is zero.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("times must be a non-empty 1-D array")
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be non-decreasing")

    width = np.asarray(integrand(float(times[0])), dtype=float).size
    out = np.zeros((times.size, width))
    for i in range(1, times.size):
        a, b = float(times[i - 1]), float(times[i])
        if b == a:
            out[i] = out[i - 1]
            continue
        value, err, info = quad_vec(
            integrand, a, b, epsabs=tol, epsrel=1e-12, norm="max", full_output=True
        )
        if not info.success:
            raise QuadratureError(
                f"Quadrature failed on segment [{a:.6g}, {b:.6g}]: {info.message}", err
            )
        out[i] = out[i - 1] + value
    return out


def doubling_trend(value_half: float, value_full: float, config: QuadratureConfig) -> Trend:
    """Classify the growth of a running integral between T_max/2 and T_max"""
    increase = value_full - value_half
    if increase > config.margin * abs(value_half) and increase > config.abs_growth:
        return Trend.DIVERGENT
    if increase < config.bounded_tol:
        return Trend.BOUNDED
    return Trend.UNDETERMINED
