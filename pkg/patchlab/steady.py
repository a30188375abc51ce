"""
Positive steady states on a fixed interval

Solves D U'' + f(U) = 0, U(0) = U(L) = 0 by shooting on U'(0): RK4 from
x = 0 to the midpoint, bisection until U'(L/2) = 0, then mirroring the
half profile. For KPP terms no positive solution exists when L < L_crit
(the energy identity and Poincare's inequality rule it out), and
solve_steady returns Trivial there. At L = L_crit the same argument forces
f(U) = f'(0) U, so a positive state exists only when f is linear on some
[0, k0]; it is then any a sin(pi x / L) with 0 < a <= k0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.integrate import simpson
from scipy.optimize import bisect

from .errors import ShootingError, ToleranceError
from .motion import CriticalLength
from .reaction import ReactionTerm

HALF_STEPS = 1000
MAX_BISECTIONS = 200
BRACKET_EXPANSIONS = 10
SLOPE_FLOOR = 1e-8
BLOWUP = 1e3
# Lengths this close to L_crit count as critical
CRITICAL_RTOL = 1e-12


@dataclass(frozen=True)
class SteadyState:
    L: float
    x: np.ndarray
    U: np.ndarray
    dU: np.ndarray
    shoot_slope: float
    degenerate: bool = False  # one member of a continuum of states at L = L_crit

    @property
    def sup_norm(self) -> float:
        return float(np.max(self.U))

    @property
    def trivial(self) -> bool:
        return False

    def on_grid(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.x, self.U)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.x, "U": self.U})


@dataclass(frozen=True)
class Trivial:
    """U = 0; below L_crit, and at L_crit for strict terms, the only non-negative solution"""
    L: float
    x: np.ndarray
    shoot_slope: float = 0.0

    @property
    def U(self) -> np.ndarray:
        return np.zeros_like(self.x)

    @property
    def dU(self) -> np.ndarray:
        return np.zeros_like(self.x)

    @property
    def sup_norm(self) -> float:
        return 0.0

    @property
    def trivial(self) -> bool:
        return True

    @property
    def degenerate(self) -> bool:
        return False

    def on_grid(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.x, "U": self.U})


def _integrate(r: ReactionTerm, D: float, half: float, slope: float, n: int,
               keep: bool = False) -> Union[float, Tuple[np.ndarray, np.ndarray]]:
    """RK4 for U' = V, V' = -f(U)/D from (0, slope) to x = half

    With keep=False returns the miss: U'(half) if U' stayed positive,
    otherwise minus the distance left when U' first reached zero. Its sign
    is monotone in the slope, which is all bisection needs. Blow-up counts
    as overshoot.
    """
    h = half / n
    f = r.rate
    u, v = 0.0, slope
    us, vs = [u], [v]
    for i in range(n):
        k1u, k1v = v, -f(u) / D
        k2u, k2v = v + 0.5 * h * k1v, -f(u + 0.5 * h * k1u) / D
        k3u, k3v = v + 0.5 * h * k2v, -f(u + 0.5 * h * k2u) / D
        k4u, k4v = v + h * k3v, -f(u + h * k3u) / D
        u += h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        v += h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
        if keep:
            us.append(u)
            vs.append(v)
            continue
        if not math.isfinite(u) or abs(u) > BLOWUP:
            return 1.0
        if v <= 0.0:
            return -(half - (i + 1) * h) - 1e-300
    if keep:
        return np.array(us), np.array(vs)
    return v


def _scan(r: ReactionTerm, D: float, half: float, n: int, hi: float) -> List[Tuple[float, float]]:
    return [(float(s), float(_integrate(r, D, half, s, n))) for s in np.geomspace(SLOPE_FLOOR, hi, 20)]


def _critical_state(r: ReactionTerm, L: float, x: np.ndarray) -> Union[SteadyState, Trivial]:
    """The largest linear-core mode k0 sin(pi x / L), or Trivial when f has no linear core"""
    k0 = r.linear_core
    if r.strict or k0 is None:
        return Trivial(L, x)
    k = math.pi / L
    U = k0 * np.sin(k * x)
    U[0] = U[-1] = 0.0
    return SteadyState(L, x, U, k0 * k * np.cos(k * x), k0 * k, degenerate=True)


def solve_steady(r: ReactionTerm, D: float, L: float, n_half: int = HALF_STEPS) -> Union[SteadyState, Trivial]:
    """Positive solution of D U'' + f(U) = 0 on (0, L), or Trivial

    Args:
        r: KPP reaction
        D: diffusivity
        L: interval length
        n_half: RK4 steps from 0 to L/2
    """
    if r.is_linear:
        raise ValueError("Steady states need a KPP reaction with f(1) = 0")
    if not L > 0 or not D > 0:
        raise ValueError(f"L and D must be positive, got L={L}, D={D}")
    x = np.linspace(0.0, L, 2 * n_half + 1)
    Lc = CriticalLength(D, r.slope).value
    if math.isclose(L, Lc, rel_tol=CRITICAL_RTOL):
        return _critical_state(r, L, x)
    if L < Lc:
        return Trivial(L, x)

    half = 0.5 * L

    def miss(s: float) -> float:
        return _integrate(r, D, half, s, n_half)

    lo, hi = SLOPE_FLOOR, 2.0 * max(1.0, r.slope * L)
    if miss(lo) >= 0:
        raise ShootingError(f"Smallest slope {lo} already overshoots at L={L}", _scan(r, D, half, n_half, hi))
    for _ in range(BRACKET_EXPANSIONS):
        if miss(hi) > 0:
            break
        hi *= 2.0
    else:
        raise ShootingError(f"No overshooting slope up to {hi} at L={L}", _scan(r, D, half, n_half, hi))

    slope, info = bisect(miss, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=MAX_BISECTIONS,
                         full_output=True, disp=False)
    if not info.converged:
        raise ToleranceError(f"Shooting did not converge in {MAX_BISECTIONS} bisections ({info.flag})")

    u, v = _integrate(r, D, half, slope, n_half, keep=True)
    U = np.concatenate((u, u[-2::-1]))
    dU = np.concatenate((v, -v[-2::-1]))
    U[0] = U[-1] = 0.0
    return SteadyState(L, x, U, dU, float(slope))


class EnergyBalance(NamedTuple):
    lhs: float              # int D U'^2
    rhs: float              # int f(U) U
    linear_bound: float     # int f'(0) U^2
    poincare_bound: float   # (D pi^2 / L^2) int U^2

    @property
    def relative_gap(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs))
        return abs(self.lhs - self.rhs) / scale if scale > 0 else 0.0


def energy_residual(st: Union[SteadyState, Trivial], r: ReactionTerm, D: float) -> EnergyBalance:
    """Both sides of int D U'^2 = int f(U) U, plus the two bounds that sandwich them"""
    if st.trivial:
        return EnergyBalance(0.0, 0.0, 0.0, 0.0)
    U, dU, x = st.U, st.dU, st.x
    square = simpson(U ** 2, x=x)
    return EnergyBalance(
        lhs=float(D * simpson(dU ** 2, x=x)),
        rhs=float(simpson(r.rate(U) * U, x=x)),
        linear_bound=float(r.slope * square),
        poincare_bound=float(D * math.pi ** 2 / st.L ** 2 * square),
    )


def epsilon_lengths(r: ReactionTerm, D: float, epsilons: Iterable[float]) -> np.ndarray:
    """L = L_crit (1 + eps)"""
    Lc = CriticalLength(D, r.slope).value
    return np.array([Lc * (1.0 + e) for e in epsilons])


def solve_many(r: ReactionTerm, D: float, lengths: Iterable[float], n_half: int = HALF_STEPS,
               n_jobs: int = 1, verbose: bool = False) -> List[Union[SteadyState, Trivial]]:
    """solve_steady at every length, in input order"""
    lengths = [float(L) for L in lengths]
    if verbose:
        print(f"   🔍 Shooting {len(lengths)} lengths on {n_jobs} worker(s)")
    return Parallel(n_jobs=n_jobs)(delayed(solve_steady)(r, D, L, n_half) for L in lengths)


def scan_frame(states: Iterable[Union[SteadyState, Trivial]]) -> pd.DataFrame:
    rows = [{"L": float(st.L), "sup_norm": st.sup_norm, "shoot_slope": st.shoot_slope, "trivial": st.trivial}
            for st in states]
    return pd.DataFrame(rows, columns=["L", "sup_norm", "shoot_slope", "trivial"])


def scan_lengths(r: ReactionTerm, D: float, lengths: Iterable[float], n_half: int = HALF_STEPS,
                 n_jobs: int = 1, verbose: bool = False) -> pd.DataFrame:
    """Steady states over a list of lengths; columns L, sup_norm, shoot_slope, trivial"""
    return scan_frame(solve_many(r, D, lengths, n_half, n_jobs, verbose))
