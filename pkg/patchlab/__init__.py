"""
patchlab: reaction-diffusion on a prescribed moving interval

Simulation on the fixed reference interval, closed-form sub/supersolution
envelopes, persistence/extinction classification and steady states.
"""

__version__ = "0.1.0"

from .classifier import (
    Outcome,
    Verdict,
    classify_drifting,
    classify_linear,
    classify_nonlinear,
)
from .diagnostics import fit_rate, fourier_coefficient, observe
from .envelope import (
    EnvelopeBounds,
    initial_constants,
    persistence_floor,
    theorem_bounds,
)
from .errors import PatchlabError
from .motion import (
    CriticalLength,
    Custom,
    DomainMotion,
    Drifting,
    ExponentialApproach,
    Fixed,
    PowerApproach,
    Tabulated,
    accumulate_integrals,
    eval_motion,
    q_bounds,
)
from .quadrature import QuadratureConfig
from .reaction import (
    ConcaveKPP,
    Linear,
    Logistic,
    PiecewiseLinearKPP,
    eval_f,
    validate_kpp,
)
from .solver import Bump, Field, Grid, Scenario, SineMode, TabulatedProfile, Trajectory, run, step
from .steady import energy_residual, solve_steady
from .transform import from_reference, gauge_factors, to_reference, u_to_w, w_to_u
