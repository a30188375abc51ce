"""
Observables of a trajectory

First Fourier sine coefficient on the moving interval, which by the change
of variables equals the reference-interval form
    (2/L) int psi sin(pi (x - A)/L) dx = (2/L0) int u sin(pi xi/L0) dxi,
the sup-norm, a trailing-window floor estimate and fitted exponential rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd
from scipy.integrate import simpson

from .errors import FitError
from .motion import DomainMotion
from .solver import Field, Trajectory
from .transform import pullback

# Fraction of the horizon covered by the floor_estimate window
FLOOR_WINDOW = 0.25


def fourier_coefficient(field: Field) -> float:
    """(2/L0) int_0^L0 u sin(pi xi/L0) dxi by composite Simpson on the field's grid"""
    xi = field.xi
    return float(2.0 / field.L0 * simpson(field.values * np.sin(math.pi * xi / field.L0), x=xi))


def physical_fourier_coefficient(field: Field, m: DomainMotion) -> float:
    """Same coefficient computed from psi on the physical interval [A, A+L]"""
    x, psi = pullback(field, m)
    s = m.evaluate(field.t)
    return float(2.0 / s.L * simpson(psi * np.sin(math.pi * (x - s.A) / s.L), x=x))


def trailing_minimum(times: np.ndarray, values: np.ndarray, window: float) -> np.ndarray:
    """min of values over [t - window, t] at every t"""
    out = np.empty_like(values)
    start = 0
    for i, t in enumerate(times):
        while times[start] < t - window * (1.0 + 1e-12):
            start += 1
        out[i] = np.min(values[start:i + 1])
    return out


@dataclass(frozen=True)
class ObservableSeries:
    times: np.ndarray
    fourier1: np.ndarray
    sup_norm: np.ndarray
    floor_estimate: np.ndarray

    def __post_init__(self):
        n = self.times.size
        if not (self.fourier1.size == self.sup_norm.size == self.floor_estimate.size == n):
            raise ValueError("Observable series lengths disagree")

    def window(self, t1: float, t2: float) -> np.ndarray:
        return (self.times >= t1) & (self.times <= t2)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "fourier1": self.fourier1,
            "sup_norm": self.sup_norm,
            "floor_estimate": self.floor_estimate,
        })


def observe(traj: Trajectory) -> ObservableSeries:
    times = traj.times
    fourier1 = np.array([fourier_coefficient(f) for f in traj.fields])
    sup = np.array([f.sup_norm() for f in traj.fields])
    horizon = float(times[-1]) if times.size else 0.0
    floor = trailing_minimum(times, fourier1, FLOOR_WINDOW * horizon)
    return ObservableSeries(times, fourier1, sup, floor)


def fit_rate(series: ObservableSeries, window: Tuple[float, float]) -> float:
    """Least-squares slope of log(fourier1) against t over the window

    Raises:
        FitError: fewer than two samples, or a non-positive coefficient in the window
    """
    mask = series.window(*window)
    t, values = series.times[mask], series.fourier1[mask]
    if t.size < 2:
        raise FitError(f"Need at least two samples in window {window}, got {t.size}")
    if np.any(values <= 0):
        bad = float(t[np.argmax(values <= 0)])
        raise FitError(f"Non-positive Fourier coefficient at t={bad:.6g}")
    slope, _ = np.polyfit(t, np.log(values), 1)
    return float(slope)
