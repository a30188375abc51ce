import math

import numpy as np
import pytest

from patchlab.diagnostics import (
    ObservableSeries,
    fit_rate,
    fourier_coefficient,
    observe,
    physical_fourier_coefficient,
    trailing_minimum,
)
from patchlab.errors import FitError
from patchlab.motion import Drifting, ExponentialApproach, Fixed
from patchlab.reaction import Linear
from patchlab.solver import Field, Grid, Scenario, run


def _mode(n: int, amplitude: float, L0: float = math.pi, N: int = 255) -> Field:
    xi = np.linspace(0.0, L0, N + 2)
    values = amplitude * np.sin(n * math.pi * xi / L0)
    values[0] = values[-1] = 0.0
    return Field(0.0, values, L0)


def test_first_mode_coefficient():
    assert fourier_coefficient(_mode(1, 2.0)) == pytest.approx(2.0, abs=1e-10)


def test_parabola_coefficient_converges_under_refinement():
    exact = 32.0 / math.pi ** 3
    errors = []
    for N in (63, 255):
        xi = np.linspace(0.0, 1.0, N + 2)
        values = 4.0 * xi * (1.0 - xi)
        values[0] = values[-1] = 0.0
        errors.append(abs(fourier_coefficient(Field(0.0, values, 1.0)) - exact))
    assert errors[0] < 1e-5
    assert errors[1] < errors[0]
    assert errors[1] < 1e-9


@pytest.mark.parametrize("n", [2, 3, 5])
def test_higher_modes_are_orthogonal(n):
    assert abs(fourier_coefficient(_mode(n, 1.0))) < 1e-10


def test_physical_and_reference_coefficients_agree():
    m = Drifting(0.5, 0.3, ExponentialApproach(math.pi, 0.4, 1.0))
    s = Scenario(m, Linear(1.0), 1.0, T=2.0, grid=Grid(N=127, dt=1e-2, n_out=4))
    for f in run(s).fields:
        assert physical_fourier_coefficient(f, m) == pytest.approx(fourier_coefficient(f), rel=1e-12)


def test_trailing_minimum_window():
    times = np.arange(8.0)
    values = np.array([5.0, 3.0, 4.0, 6.0, 7.0, 2.0, 8.0, 9.0])
    np.testing.assert_array_equal(
        trailing_minimum(times, values, 2.0),
        [5.0, 3.0, 3.0, 3.0, 4.0, 2.0, 2.0, 2.0],
    )


def test_observe_columns_and_floor():
    s = Scenario(Fixed(0.9 * math.pi), Linear(1.0), 1.0, T=2.0, grid=Grid(N=63, dt=1e-2, n_out=20))
    frame = observe(run(s)).to_frame()
    assert list(frame.columns) == ["t", "fourier1", "sup_norm", "floor_estimate"]
    assert len(frame) == 21
    assert np.all(frame["floor_estimate"] <= frame["fourier1"])
    # decaying mode: the trailing minimum is the current value
    np.testing.assert_allclose(frame["floor_estimate"], frame["fourier1"])


def test_fit_rate_recovers_exponent():
    t = np.linspace(0.0, 4.0, 41)
    series = ObservableSeries(t, np.exp(0.3 * t - 1.0), np.ones_like(t), np.ones_like(t))
    assert fit_rate(series, (1.0, 3.0)) == pytest.approx(0.3, rel=1e-10)


def test_fit_rate_on_fixed_interval_run():
    L = 1.25 * math.pi
    s = Scenario(Fixed(L), Linear(1.0), 1.0, T=2.0, grid=Grid(N=255, dt=1e-3, n_out=20))
    rate = fit_rate(observe(run(s)), (0.5, 2.0))
    assert rate == pytest.approx(1.0 - math.pi ** 2 / L ** 2, abs=1e-3)


def test_fit_rate_errors():
    t = np.linspace(0.0, 1.0, 5)
    series = ObservableSeries(t, np.array([1.0, 0.5, 0.0, 0.2, 0.1]), t, t)
    with pytest.raises(FitError, match="at least two"):
        fit_rate(series, (0.3, 0.4))
    with pytest.raises(FitError, match="Non-positive"):
        fit_rate(series, (0.0, 1.0))


def test_series_length_mismatch():
    with pytest.raises(ValueError):
        ObservableSeries(np.zeros(3), np.zeros(2), np.zeros(3), np.zeros(3))
