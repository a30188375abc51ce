"""
Reaction-diffusion on the moving interval, solved on the fixed reference interval

After the pullback xi = (x - A) L0 / L the density u(xi, t) satisfies

    u_t = D (L0/L)^2 u_xixi + ((A_dot L0 + xi L_dot) / L) u_xi + f(u),
    u(0, t) = u(L0, t) = 0,

which is discretized on one uniform xi-grid: Crank-Nicolson in time with
coefficients frozen at t + dt/2, centered differences in space, and one
tridiagonal solve per step. A linear reaction is folded into the implicit
operator; a nonlinear reaction is averaged between u^n and an extrapolated
predictor.

USAGE:
    s = Scenario(Fixed(math.pi), Linear(1.0), D=1.0, initial=SineMode(1.0), T=5.0)
    traj = run(s)
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.linalg

from .errors import (
    DivergenceError,
    DomainDegeneracyError,
    MotionRangeError,
    StepSizeError,
    SupercriticalDriftError,
)
from .motion import CriticalLength, DomainMotion, IntegralLedger, accumulate_integrals
from .quadrature import QuadratureConfig
from .reaction import ReactionTerm

# Values below -NEGATIVE_TOL are clipped to zero and counted
NEGATIVE_TOL = 1e-12
DEFAULT_OUTPUTS = 200
MIN_INTERIOR = 16


# =============== GRID ===============

@dataclass(frozen=True)
class Grid:
    """Discretization of the reference interval and of time

    Args:
        N: interior nodes; raised by one if needed so N+1 (the number of
            cells) is even, as composite Simpson requires
        dt: time step; ignored when `cfl` is set
        cfl: if set, dt = cfl * h^2 / D on the reference grid
        n_out: number of output intervals (n_out + 1 snapshots)
    """
    N: int = 256
    dt: float = 1e-3
    cfl: Optional[float] = None
    n_out: int = DEFAULT_OUTPUTS

    def __post_init__(self):
        if self.N < MIN_INTERIOR:
            raise ValueError(f"Grid needs at least {MIN_INTERIOR} interior nodes, got {self.N}")
        if (self.N + 1) % 2:
            object.__setattr__(self, "N", self.N + 1)
        if not self.dt > 0:
            raise ValueError(f"Time step must be positive, got {self.dt}")
        if self.cfl is not None and not self.cfl > 0:
            raise ValueError(f"CFL target must be positive, got {self.cfl}")
        if self.n_out < 1:
            raise ValueError(f"Need at least one output interval, got {self.n_out}")

    def spacing(self, L0: float) -> float:
        return L0 / (self.N + 1)

    def nodes(self, L0: float) -> np.ndarray:
        """All N+2 nodes of [0, L0], boundaries included"""
        return np.linspace(0.0, L0, self.N + 2)

    def time_step(self, L0: float, D: float) -> float:
        if self.cfl is None:
            return self.dt
        return self.cfl * self.spacing(L0) ** 2 / D

    def schedule(self, T: float, L0: float, D: float) -> Tuple[int, float, np.ndarray]:
        """(n_steps, dt, output step indices) with dt adjusted to land on T"""
        dt = self.time_step(L0, D)
        n_steps = max(1, int(round(T / dt)))
        if abs(n_steps * dt - T) > 1e-9 * T:
            n_steps = int(math.ceil(T / dt))
        out = np.unique(np.round(np.linspace(0, n_steps, self.n_out + 1)).astype(int))
        return n_steps, T / n_steps, out


# =============== INITIAL PROFILES ===============

class InitialProfile(ABC):
    kind = "abstract"

    @abstractmethod
    def values(self, xi: np.ndarray, L0: float) -> np.ndarray:
        ...


@dataclass(frozen=True)
class SineMode(InitialProfile):
    """amplitude * sin(pi xi / L0)"""
    amplitude: float = 1.0
    kind = "sine"

    def values(self, xi: np.ndarray, L0: float) -> np.ndarray:
        return self.amplitude * np.sin(math.pi * xi / L0)


@dataclass(frozen=True)
class Bump(InitialProfile):
    """height * cos^2(pi (xi - center) / width) on |xi - center| < width/2, zero elsewhere"""
    center: float
    width: float
    height: float = 1.0
    kind = "bump"

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"Bump width must be positive, got {self.width}")

    def values(self, xi: np.ndarray, L0: float) -> np.ndarray:
        if self.center - self.width / 2 < 0 or self.center + self.width / 2 > L0:
            raise ValueError(f"Bump support [{self.center - self.width / 2}, "
                             f"{self.center + self.width / 2}] leaves [0, {L0}]")
        z = (xi - self.center) / self.width
        return np.where(np.abs(z) < 0.5, self.height * np.cos(math.pi * z) ** 2, 0.0)


@dataclass(frozen=True)
class TabulatedProfile(InitialProfile):
    """Samples (position from the left end, density), linearly interpolated"""
    positions: Tuple[float, ...]
    densities: Tuple[float, ...]
    kind = "tabulated"

    def __post_init__(self):
        if len(self.positions) != len(self.densities) or len(self.positions) < 2:
            raise ValueError("Tabulated profile needs at least two (position, density) samples")
        if np.any(np.diff(self.positions) <= 0):
            raise ValueError("Tabulated profile positions must be strictly increasing")

    @classmethod
    def from_csv(cls, path) -> "TabulatedProfile":
        frame = pd.read_csv(Path(path))
        return cls(tuple(frame.iloc[:, 0]), tuple(frame.iloc[:, 1]))

    def values(self, xi: np.ndarray, L0: float) -> np.ndarray:
        return np.interp(xi, self.positions, self.densities, left=0.0, right=0.0)


# =============== SCENARIO / FIELD ===============

@dataclass(frozen=True)
class Scenario:
    """A complete problem instance; L0 is always L(0)"""
    motion: DomainMotion
    reaction: ReactionTerm
    D: float
    initial: InitialProfile = SineMode(1.0)
    T: float = 10.0
    grid: Grid = Grid()
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"Diffusivity D must be positive, got {self.D}")
        if not self.T > 0:
            raise ValueError(f"Horizon T must be positive, got {self.T}")
        limit = self.motion.time_limit()
        if limit is not None and self.T > limit * (1.0 + 1e-12):
            raise MotionRangeError(f"Horizon T={self.T} runs past the motion, defined up to t={limit}")
        self.motion.check_positive(self.T)
        u0 = self.initial.values(self.xi, self.L0)
        if np.any(u0 < 0):
            raise ValueError("Initial profile must be non-negative")
        if abs(u0[0]) > 1e-12 or abs(u0[-1]) > 1e-12:
            raise ValueError("Initial profile must vanish at both ends of the interval")

    @property
    def L0(self) -> float:
        return self.motion.initial_length

    @property
    def xi(self) -> np.ndarray:
        return self.grid.nodes(self.L0)

    @property
    def nonlinear(self) -> bool:
        return not self.reaction.is_linear

    def critical_length(self) -> CriticalLength:
        """L_crit for the motion's drift speed; falls back to c = 0 when supercritical"""
        try:
            return CriticalLength(self.D, self.reaction.slope, self.motion.drift_speed())
        except SupercriticalDriftError:
            return CriticalLength(self.D, self.reaction.slope)

    def initial_field(self) -> "Field":
        values = self.initial.values(self.xi, self.L0).astype(float)
        values[0] = values[-1] = 0.0
        return Field(0.0, values, self.L0)

    def with_grid(self, **changes) -> "Scenario":
        return replace(self, grid=replace(self.grid, **changes))


@dataclass(frozen=True)
class Field:
    """u on the reference grid at time t; entry 0 and entry -1 are the boundaries"""
    t: float
    values: np.ndarray
    L0: float
    clipped: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.values.ndim != 1 or self.values.size < 3:
            raise ValueError("Field values must be a 1-D array with boundary nodes")
        if self.values[0] != 0.0 or self.values[-1] != 0.0:
            raise ValueError(f"Field at t={self.t} does not vanish at the boundary")
        if not np.all(np.isfinite(self.values)):
            raise DivergenceError(f"Non-finite field values at t={self.t}")

    @property
    def N(self) -> int:
        return self.values.size - 2

    @property
    def h(self) -> float:
        return self.L0 / (self.N + 1)

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(0.0, self.L0, self.N + 2)

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.t, np.asarray(values, dtype=float), self.L0)


# =============== STEPPING ===============

def solve_tridiagonal(upper: np.ndarray, diag: np.ndarray, lower: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve lower_j u_{j-1} + diag_j u_j + upper_j u_{j+1} = rhs_j

    upper[-1] and lower[0] are ignored.
    """
    ab = np.array((np.roll(upper, 1), diag, np.roll(lower, -1)))
    return scipy.linalg.solve_banded((1, 1), ab, rhs)


class _Stepper:
    """Per-scenario constants of the scheme"""

    def __init__(self, s: Scenario, N: int):
        self.s = s
        self.L0 = s.L0
        self.h = self.L0 / (N + 1)
        self.xi_in = np.linspace(0.0, self.L0, N + 2)[1:-1]
        self.slope = s.reaction.slope

    def operator(self, t_mid: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(lower, diag, upper) of the spatial operator at t_mid, linear reaction excluded"""
        m = self.s.motion.evaluate(t_mid)
        diff = self.s.D * (self.L0 / m.L) ** 2 / self.h ** 2
        adv = (m.A_dot * self.L0 + self.xi_in * m.L_dot) / m.L / (2.0 * self.h)
        return diff - adv, np.full_like(adv, -2.0 * diff), diff + adv

    def advance(self, u: np.ndarray, t: float, dt: float, u_prev: Optional[np.ndarray]) -> Tuple[np.ndarray, int]:
        lower, diag, upper = self.operator(t + 0.5 * dt)
        linear = not self.s.nonlinear
        if linear:
            diag = diag + self.slope

        lhs_diag = 1.0 - 0.5 * dt * diag
        lhs_lower = -0.5 * dt * lower
        lhs_upper = -0.5 * dt * upper
        off = np.abs(lhs_lower) + np.abs(lhs_upper)
        if np.any(np.abs(lhs_diag) < off):
            diff = 0.5 * (upper + lower)
            adv = 0.5 * np.abs(upper - lower)
            rate = self.slope if linear else 0.0
            excess = float(np.max(np.maximum(adv - diff, 0.0))) + 0.5 * rate
            raise StepSizeError(
                f"Diagonal dominance lost at t={t:.6g} with dt={dt:.3g}",
                f"Reduce dt below {1.0 / excess:.3g} or increase N",
            )

        ui = u[1:-1]
        left = np.concatenate(([0.0], ui[:-1]))
        right = np.concatenate((ui[1:], [0.0]))
        rhs = ui + 0.5 * dt * (lower * left + diag * ui + upper * right)
        if not linear:
            f = self.s.reaction.rate
            predictor = ui if u_prev is None else np.maximum(2.0 * ui - u_prev[1:-1], 0.0)
            rhs = rhs + 0.5 * dt * (f(np.maximum(ui, 0.0)) + f(predictor))

        new = solve_tridiagonal(lhs_upper, lhs_diag, lhs_lower, rhs)
        if not np.all(np.isfinite(new)):
            raise DivergenceError(f"Non-finite values after the step to t={t + dt:.6g}")
        negative = new < -NEGATIVE_TOL
        clipped = int(np.count_nonzero(negative))
        if clipped:
            new = np.where(negative, 0.0, new)
        out = np.zeros_like(u)
        out[1:-1] = new
        return out, clipped


def step(state: Field, s: Scenario, t: float, dt: float, previous: Optional[Field] = None) -> Field:
    """Advance `state` from t to t + dt

    Args:
        state: field at time t
        s: scenario
        t: current time
        dt: step
        previous: field at t - dt, used by the nonlinear predictor
    """
    if not math.isclose(state.t, t, rel_tol=1e-12, abs_tol=1e-12):
        raise ValueError(f"Field is at t={state.t}, not t={t}")
    if not dt > 0:
        raise ValueError(f"Time step must be positive, got {dt}")
    stepper = _Stepper(s, state.N)
    values, clipped = stepper.advance(
        state.values, t, dt, None if previous is None else previous.values
    )
    return Field(t + dt, values, state.L0, clipped)


# =============== RUN ===============

@dataclass(frozen=True)
class Trajectory:
    """Snapshots of a run plus the motion ledger on the snapshot times

    `error` is None for a complete run; otherwise the run stopped early and
    `fields` holds everything computed before the failure.
    """
    scenario: Scenario
    fields: Tuple[Field, ...]
    dt: float
    n_steps: int
    ledger: Optional[IntegralLedger] = None
    error: Optional[str] = None
    clipped: int = 0

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.fields])

    @property
    def xi(self) -> np.ndarray:
        return self.fields[0].xi

    @property
    def final(self) -> Field:
        return self.fields[-1]

    def matrix(self) -> np.ndarray:
        """(n_snapshots, N+2) array of u"""
        return np.vstack([f.values for f in self.fields])

    def at(self, t: float) -> Field:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.fields[i]

    def to_frame(self) -> pd.DataFrame:
        """Long table with columns t, xi, u"""
        xi = self.xi
        return pd.DataFrame({
            "t": np.repeat(self.times, xi.size),
            "xi": np.tile(xi, len(self.fields)),
            "u": self.matrix().ravel(),
        })


def run(s: Scenario, verbose: bool = False) -> Trajectory:
    """Integrate the scenario on [0, T] and collect the output snapshots"""
    n_steps, dt, out_steps = s.grid.schedule(s.T, s.L0, s.D)
    stepper = _Stepper(s, s.grid.N)
    current = s.initial_field()
    fields: List[Field] = [current]
    wanted = set(int(i) for i in out_steps[1:])
    report_every = max(1, n_steps // 10)
    clipped = 0
    error = None

    if verbose:
        print(f"   ⚙️  N={s.grid.N}, dt={dt:.3g}, {n_steps} steps, {len(out_steps)} snapshots")

    u_prev = None
    u = current.values
    for n in range(n_steps):
        t = n * dt
        try:
            u_next, c = stepper.advance(u, t, dt, u_prev)
        except (StepSizeError, DivergenceError, MotionRangeError, DomainDegeneracyError) as exc:
            error = f"{type(exc).__name__}: {exc}"
            if verbose:
                print(f"   ❌ Stopped at t={t:.6g}: {exc}")
            break
        clipped += c
        u_prev, u = u, u_next
        if n + 1 in wanted:
            fields.append(Field((n + 1) * dt, u, s.L0, c))
        if verbose and (n + 1) % report_every == 0:
            print(f"   ⏳ t = {(n + 1) * dt:.4g} / {s.T:g}")

    ledger = None
    if len(fields) > 1:
        times = np.array([f.t for f in fields])
        ledger = accumulate_integrals(s.motion, s.critical_length(), float(times[-1]), s.quad, times=times)

    return Trajectory(s, tuple(fields), dt, n_steps, ledger, error, clipped)
