"""
Exception hierarchy for patchlab

Every failure the library can raise derives from PatchlabError. Errors about
bad arguments also derive from ValueError so `except ValueError` keeps
catching them.
"""


class PatchlabError(Exception):
    """Base class for all patchlab errors"""


class ConfigError(PatchlabError, ValueError):
    """Invalid scenario configuration (unknown key, bad value, missing section)"""

    def __init__(self, message: str, section: str = None, key: str = None, line: int = None):
        self.section = section
        self.key = key
        self.line = line
        where = []
        if section:
            where.append(f"[{section}]")
        if key:
            where.append(key)
        if line is not None:
            where.append(f"line {line}")
        prefix = " ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


# =============== MOTION ===============

class MotionRangeError(PatchlabError, ValueError):
    """Time outside the range a tabulated motion covers"""


class DomainDegeneracyError(PatchlabError, ValueError):
    """Interval length L(t) is not strictly positive"""


class DomainError(PatchlabError, ValueError):
    """Position outside the current interval [A(t), A(t)+L(t)]"""


class SupercriticalDriftError(PatchlabError, ValueError):
    """Drift speed |c| >= 2*sqrt(D f'(0)); no drifting critical length exists"""


# =============== REACTION ===============

class ReactionArgumentError(PatchlabError, ValueError):
    """Reaction evaluated at a negative density"""


# =============== NUMERICS ===============

class QuadratureError(PatchlabError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance"""

    def __init__(self, message: str, error_estimate: float = float("nan")):
        self.error_estimate = error_estimate
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")


class LedgerError(PatchlabError, LookupError):
    """Requested time is not available in an integral ledger"""


class GaugeConsistencyError(PatchlabError, ValueError):
    """Field and gauge factors refer to different times or grids"""


class StepSizeError(PatchlabError, RuntimeError):
    """Tridiagonal system lost diagonal dominance; the time step is too large"""

    def __init__(self, message: str, advice: str = ""):
        self.advice = advice
        super().__init__(f"{message}. {advice}" if advice else message)


class DivergenceError(PatchlabError, ArithmeticError):
    """Non-finite values appeared in the solution"""


class FitError(PatchlabError, ValueError):
    """Rate fit impossible (non-positive values in the window)"""


class ShootingError(PatchlabError, RuntimeError):
    """Shooting bracket for the initial slope could not be established"""

    def __init__(self, message: str, scan: list = None):
        self.scan = scan or []
        super().__init__(message)


class ToleranceError(PatchlabError, RuntimeError):
    """Iteration stopped before reaching the requested tolerance"""


class IncompleteRunError(PatchlabError, RuntimeError):
    """A simulation stopped early; whatever it produced was still written out"""

    def __init__(self, message: str, files: list = None):
        self.files = files or []
        super().__init__(message)
