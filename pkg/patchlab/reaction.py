"""
Reaction terms

Linear growth and the KPP family: f(0) = f(1) = 0, f'(0) > 0 and f(k)/k
non-increasing. The structural conditions are checked on a sampled grid;
failures come back as data with a witness point.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import ReactionArgumentError

# Density grid used by the structural checks
CHECK_POINTS = 1000
CHECK_SLACK = 1e-12


class ReactionTerm(ABC):
    """f(k) with a declared slope f'(0)

    Subclasses set `kind`, `strict` (f(k) < f'(0) k just above 0) and
    `linear_core` (the k0 below which f(k) = f'(0) k exactly, if any).
    """

    kind = "abstract"
    slope: float
    strict = False
    is_linear = False

    @property
    def linear_core(self) -> Optional[float]:
        return None

    @abstractmethod
    def rate(self, k):
        """Unchecked vectorized f(k)"""

    def __call__(self, k):
        return self.rate(k)


@dataclass(frozen=True)
class Linear(ReactionTerm):
    """f(k) = slope * k"""
    slope: float
    kind = "linear"
    is_linear = True

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError(f"Reaction slope must be positive, got {self.slope}")

    def rate(self, k):
        return self.slope * k


@dataclass(frozen=True)
class Logistic(ReactionTerm):
    """f(k) = slope * k (1 - k)"""
    slope: float
    kind = "logistic"
    strict = True

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError(f"Reaction slope must be positive, got {self.slope}")

    def rate(self, k):
        return self.slope * k * (1.0 - k)


@dataclass(frozen=True)
class PiecewiseLinearKPP(ReactionTerm):
    """f(k) = slope * k on [0, k0], then the straight line down to f(1) = 0"""
    slope: float
    k0: float = 0.25
    kind = "piecewise"

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError(f"Reaction slope must be positive, got {self.slope}")
        if not 0 < self.k0 < 1:
            raise ValueError(f"k0 must lie in (0, 1), got {self.k0}")

    @property
    def linear_core(self) -> float:
        return self.k0

    def rate(self, k):
        k = np.asarray(k, dtype=float)
        # (1-k)/(1-k0) is exactly 1.0 at k = k0, so both branches agree bitwise there
        upper = self.slope * self.k0 * ((1.0 - k) / (1.0 - self.k0))
        out = np.where(k <= self.k0, self.slope * k, upper)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class ConcaveKPP(ReactionTerm):
    """User-supplied f with a self-declared slope f'(0)"""
    evaluator: Callable
    slope: float
    strict: bool = True
    name: str = "custom"
    kind = "concave"

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError(f"Reaction slope must be positive, got {self.slope}")

    def rate(self, k):
        k_arr = np.asarray(k, dtype=float)
        if k_arr.ndim == 0:
            return float(self.evaluator(float(k_arr)))
        return np.array([self.evaluator(float(x)) for x in k_arr.ravel()]).reshape(k_arr.shape)


def eval_f(r: ReactionTerm, k):
    """f(k) for non-negative densities (scalar or array)"""
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0):
        raise ReactionArgumentError(f"Densities must be non-negative, got min {float(np.min(k_arr))}")
    return r.rate(k)


# =============== KPP VALIDATION ===============

@dataclass(frozen=True)
class ConditionResult:
    name: str
    status: str          # "pass", "fail" or "n/a"
    witness: Optional[float] = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    checks: List[ConditionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def failures(self) -> List[ConditionResult]:
        return [c for c in self.checks if c.status == "fail"]

    def status_of(self, name: str) -> str:
        for c in self.checks:
            if c.name == name:
                return c.status
        raise KeyError(name)


def validate_kpp(r: ReactionTerm) -> ValidationReport:
    """Check f(0)=0, f(1)=0, f'(0)>0, f(k)/k non-increasing and f <= f'(0) k"""
    checks = []

    f0 = float(r.rate(0.0))
    checks.append(ConditionResult("f(0)=0", "pass" if f0 == 0.0 else "fail",
                                  None if f0 == 0.0 else 0.0, f"f(0) = {f0:.3e}"))

    if r.is_linear:
        checks.append(ConditionResult("f(1)=0", "n/a", detail="linear reaction"))
    else:
        f1 = float(r.rate(1.0))
        ok = abs(f1) <= CHECK_SLACK
        checks.append(ConditionResult("f(1)=0", "pass" if ok else "fail",
                                      None if ok else 1.0, f"f(1) = {f1:.3e}"))

    ok = r.slope > 0
    checks.append(ConditionResult("f'(0)>0", "pass" if ok else "fail",
                                  None if ok else 0.0, f"slope = {r.slope}"))

    k = np.linspace(1.0 / CHECK_POINTS, 1.0, CHECK_POINTS)
    values = np.asarray(r.rate(k), dtype=float)
    ratio = values / k
    rises = np.nonzero(np.diff(ratio) > CHECK_SLACK)[0]
    if rises.size:
        w = float(k[rises[0] + 1])
        checks.append(ConditionResult("f(k)/k non-increasing", "fail", w,
                                      f"f(k)/k rises near k = {w:.4g}"))
    else:
        checks.append(ConditionResult("f(k)/k non-increasing", "pass"))

    excess = values - r.slope * k
    above = np.nonzero(excess > CHECK_SLACK)[0]
    if above.size:
        w = float(k[above[0]])
        checks.append(ConditionResult("f(k)<=f'(0)k", "fail", w,
                                      f"f exceeds f'(0) k by {excess[above[0]]:.3e}"))
    else:
        checks.append(ConditionResult("f(k)<=f'(0)k", "pass"))

    return ValidationReport(r.kind, checks)
