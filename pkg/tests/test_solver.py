import math

import numpy as np
import pytest

from patchlab.errors import DomainDegeneracyError, MotionRangeError, StepSizeError
from patchlab.motion import Custom, Drifting, ExponentialApproach, Fixed, PowerApproach, Tabulated
from patchlab.reaction import Linear, Logistic
from patchlab.solver import (
    Bump,
    Field,
    Grid,
    InitialProfile,
    Scenario,
    SineMode,
    TabulatedProfile,
    run,
    solve_tridiagonal,
    step,
)


def test_grid_keeps_even_cell_count():
    assert Grid(N=256).N == 257
    assert Grid(N=255).N == 255
    with pytest.raises(ValueError):
        Grid(N=8)


def test_schedule_lands_on_horizon():
    n_steps, dt, out = Grid(dt=0.3, n_out=2).schedule(1.0, math.pi, 1.0)
    assert n_steps == 4
    assert dt == pytest.approx(0.25)
    assert list(out) == [0, 2, 4]


def test_cfl_time_step():
    grid = Grid(N=31, cfl=0.5)
    assert grid.time_step(math.pi, 2.0) == pytest.approx(0.5 * (math.pi / 32) ** 2 / 2.0)


def test_solve_tridiagonal_matches_dense():
    rng = np.random.default_rng(3)
    n = 12
    lower, upper = rng.uniform(-1, 0, n), rng.uniform(-1, 0, n)
    diag = 3.0 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=n)
    dense = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
    np.testing.assert_allclose(solve_tridiagonal(upper, diag, lower, rhs), np.linalg.solve(dense, rhs))


def test_initial_profiles_vanish_at_ends():
    xi = np.linspace(0.0, 2.0, 21)
    assert SineMode(2.0).values(xi, 2.0)[10] == pytest.approx(2.0)
    bump = Bump(1.0, 1.0, 0.5).values(xi, 2.0)
    assert bump[0] == bump[-1] == 0.0
    assert bump.max() == pytest.approx(0.5)
    table = TabulatedProfile((0.0, 1.0, 2.0), (0.0, 1.0, 0.0)).values(xi, 2.0)
    assert table[5] == pytest.approx(0.5)


def test_initial_profile_base_is_abstract():
    with pytest.raises(TypeError):
        InitialProfile()


def test_scenario_rejects_bad_initial_data():
    with pytest.raises(ValueError):
        Scenario(Fixed(math.pi), Linear(1.0), 1.0, initial=SineMode(-1.0))
    with pytest.raises(ValueError):
        Scenario(Fixed(1.0), Linear(1.0), 1.0, initial=Bump(0.9, 0.5))
    with pytest.raises(ValueError):
        Scenario(Fixed(1.0), Linear(1.0), 0.0)


def test_field_requires_zero_boundary():
    with pytest.raises(ValueError):
        Field(0.0, np.array([0.1, 1.0, 0.0]), 1.0)


def test_zero_initial_data_stays_zero():
    s = Scenario(Fixed(math.pi), Logistic(1.0), 1.0, initial=SineMode(0.0), T=1.0,
                 grid=Grid(N=31, dt=0.01, n_out=5))
    traj = run(s)
    assert traj.ok
    assert np.all(traj.matrix() == 0.0)


def test_fixed_interval_matches_exact_mode():
    L = 1.25 * math.pi
    s = Scenario(Fixed(L), Linear(1.0), 1.0, T=1.0, grid=Grid(N=255, dt=1e-3, n_out=4))
    traj = run(s)
    exact = math.exp(1.0 - math.pi ** 2 / L ** 2) * np.sin(math.pi * traj.xi / L)
    np.testing.assert_allclose(traj.final.values, exact, atol=2e-4)


def test_second_order_in_space():
    L = math.pi
    errors = []
    for N in (31, 63, 127):
        s = Scenario(Fixed(L), Linear(1.0), 1.0, T=1.0, grid=Grid(N=N, dt=1e-4, n_out=1))
        traj = run(s)
        exact = math.exp(1.0 - math.pi ** 2 / L ** 2) * np.sin(math.pi * traj.xi / L)
        errors.append(np.max(np.abs(traj.final.values - exact)))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    assert all(3.3 <= r <= 4.7 for r in ratios), ratios


def test_second_order_in_time_on_moving_interval():
    m = ExponentialApproach(math.pi, 0.3, 1.0)

    def final(dt):
        s = Scenario(m, Linear(1.0), 1.0, T=1.0, grid=Grid(N=63, dt=dt, n_out=1))
        return run(s).final.values

    reference = final(0.0025 / 4)
    errors = [np.max(np.abs(final(dt) - reference)) for dt in (0.04, 0.02, 0.01)]
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    assert all(3.3 <= r <= 4.7 for r in ratios), ratios


def test_comparison_principle_orders_solutions():
    m = PowerApproach(math.pi, 0.5, 2.0)
    grid = Grid(N=63, dt=5e-4, n_out=10)
    small = run(Scenario(m, Linear(1.0), 1.0, initial=Bump(0.8, 1.0, 0.5), T=2.0, grid=grid))
    large = run(Scenario(m, Linear(1.0), 1.0, initial=SineMode(1.0), T=2.0, grid=grid))
    for lo, hi in zip(small.fields, large.fields):
        assert np.all(lo.values <= hi.values + 1e-10)


def test_nonlinear_run_stays_non_negative_and_bounded():
    s = Scenario(Fixed(2 * math.pi), Logistic(1.0), 1.0, initial=SineMode(0.5), T=20.0,
                 grid=Grid(N=63, dt=0.01, n_out=20))
    traj = run(s)
    assert traj.ok
    m = traj.matrix()
    assert m.min() >= -1e-12
    assert m.max() <= 1.0 + 1e-6


def test_step_matches_run_for_one_step():
    s = Scenario(Fixed(math.pi), Linear(1.0), 1.0, T=0.01, grid=Grid(N=31, dt=0.01, n_out=1))
    one = step(s.initial_field(), s, 0.0, 0.01)
    np.testing.assert_allclose(one.values, run(s).final.values, rtol=1e-14)
    with pytest.raises(ValueError):
        step(s.initial_field(), s, 0.5, 0.01)


def test_step_size_error_and_partial_trajectory():
    m = Custom(lambda t: (0.0, 0.0, 0.0, 1.0 + 100.0 * t, 100.0, 0.0))
    s = Scenario(m, Linear(1.0), 1.0, T=1.0, grid=Grid(N=16, dt=0.01, n_out=10))
    with pytest.raises(StepSizeError) as info:
        step(s.initial_field(), s, 0.0, 0.01)
    assert "Reduce dt below" in info.value.advice
    traj = run(s)
    assert not traj.ok
    assert "StepSizeError" in traj.error
    assert len(traj.fields) == 1


def test_scenario_checks_motion_over_horizon():
    t = (0.0, 0.5, 1.0, 1.5, 2.0)
    short = Tabulated(t, (math.pi,) * 5)
    with pytest.raises(MotionRangeError):
        Scenario(short, Linear(1.0), 1.0, T=5.0)
    Scenario(short, Linear(1.0), 1.0, T=2.0)
    with pytest.raises(MotionRangeError):
        Scenario(Drifting(0.0, 0.5, short), Linear(1.0), 1.0, T=5.0)
    shrinking = Custom(lambda t: (0.0, 0.0, 0.0, 2.0 - t, -1.0, 0.0))
    with pytest.raises(DomainDegeneracyError):
        Scenario(shrinking, Linear(1.0), 1.0, initial=SineMode(0.1), T=5.0)


def test_motion_failure_mid_run_keeps_partial_trajectory():
    def collapses_briefly(t):
        L = -1.0 if 0.5077 < t < 0.5079 else math.pi
        return 0.0, 0.0, 0.0, L, 0.0, 0.0

    s = Scenario(Custom(collapses_briefly), Linear(1.0), 1.0, T=1.0,
                 grid=Grid(N=31, dt=1 / 64, n_out=64))
    traj = run(s)
    assert not traj.ok
    assert "DomainDegeneracyError" in traj.error
    assert len(traj.fields) == 33
    assert traj.fields[-1].t == pytest.approx(0.5)
    assert traj.ledger is not None


def test_trajectory_frame_and_ledger():
    s = Scenario(ExponentialApproach(math.pi, 0.3, 1.0), Linear(1.0), 1.0, T=1.0,
                 grid=Grid(N=31, dt=0.01, n_out=4))
    traj = run(s)
    frame = traj.to_frame()
    assert list(frame.columns) == ["t", "xi", "u"]
    assert len(frame) == 5 * 33
    np.testing.assert_allclose(traj.ledger.times, traj.times)
    assert traj.at(0.49).t == pytest.approx(0.5)
