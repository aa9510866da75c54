"""Mean-field Bloch dynamics and the closed-form limit cycle."""

import numpy as np
import pytest

from spinclock.semiclassical import (
    bloch_rhs,
    hopf_threshold,
    integrate_bloch,
    limit_cycle_frequency,
    limit_cycle_from_u,
    measured_cycle_period,
    stable_fixed_point,
    stereographic_limit_cycle,
    theta_solution,
)


def test_hopf_threshold_and_frequency():
    assert hopf_threshold(0.1, 10) == pytest.approx(0.5)
    assert limit_cycle_frequency(2.0, 1.0) == pytest.approx(np.sqrt(3.0))
    with pytest.raises(ValueError):
        limit_cycle_frequency(1.0, 2.0)


def test_theta_solution_matches_ode():
    # a = omega0/omega = 0.5, ten cycles
    omega, omega0 = 2.0, 1.0
    w = limit_cycle_frequency(omega, omega0)
    t = np.linspace(0.0, 10 * 2 * np.pi / w, 4001)
    traj = integrate_bloch(omega, 2 * omega0 / 10, 10, t)  # gamma*N/2 = omega0
    assert np.max(np.abs(traj.theta - theta_solution(t, omega, omega0))) < 1e-6


def test_theta_solution_handles_general_initial_phase():
    omega, omega0 = 3.0, 1.0
    w = limit_cycle_frequency(omega, omega0)
    t = np.linspace(0.0, 3 * 2 * np.pi / w, 1501)
    theta0 = 0.3
    x0 = np.array([0.0, 0.5 * np.sin(theta0), 0.5 * np.cos(theta0)])
    traj = integrate_bloch(omega, 2 * omega0 / 8, 8, t, x0=x0)
    assert np.max(np.abs(traj.theta - theta_solution(t, omega, omega0, theta0=theta0))) < 1e-6


@pytest.mark.parametrize("ratio", [1.1, 2.0, 12.0])
def test_measured_period_matches_closed_form(ratio):
    n, gamma = 10, 0.2
    omega0 = gamma * n / 2
    omega = ratio * omega0
    period = measured_cycle_period(omega, gamma, n)
    expected = 2 * np.pi / limit_cycle_frequency(omega, omega0)
    assert abs(period / expected - 1) < 1e-3


@pytest.mark.parametrize("ratio", [0.5, 0.9])
def test_below_threshold_converges_to_fixed_point(ratio):
    n, gamma = 6, 0.5
    omega0 = gamma * n / 2
    omega = ratio * omega0
    fp = stable_fixed_point(omega, omega0)
    assert np.linalg.norm(bloch_rhs(fp, omega, gamma, n)) < 1e-12
    t = np.linspace(0.0, 200.0 / gamma, 2001)
    traj = integrate_bloch(omega, gamma, n, t)
    final = np.array([traj.x[-1], traj.y[-1], traj.z[-1]])
    assert np.linalg.norm(final - fp) < 1e-6


def test_sphere_conserved_along_orbit():
    t = np.linspace(0.0, 40.0, 2001)
    traj = integrate_bloch(2 * np.pi, 0.1, 10, t)
    assert traj.sphere_error < 1e-8


def test_theta_decreases_monotonically_above_threshold():
    t = np.linspace(0.0, 20.0, 2001)
    traj = integrate_bloch(3.0, 0.25, 8, t)  # omega0 = 1
    assert np.all(np.diff(traj.theta) < 0)


def test_stereographic_limit_cycle_matches_flow():
    omega, omega0 = np.pi, 1.0
    w = limit_cycle_frequency(omega, omega0)
    t = np.linspace(0.05, 2 * np.pi / w - 0.05, 400)
    u = stereographic_limit_cycle(t, omega, omega0)
    y, z = limit_cycle_from_u(u)
    assert np.max(np.abs(y**2 + z**2 - 0.25)) < 1e-12
    # the parametrized point moves with the mean-field flow (X = 0 plane)
    dt = 1e-6
    u2 = stereographic_limit_cycle(t + dt, omega, omega0)
    y2, z2 = limit_cycle_from_u(u2)
    for k in range(0, len(t), 50):
        state = np.array([0.0, y[k], z[k]])
        rhs = bloch_rhs(state, omega, 2 * omega0 / 10, 10)
        assert abs((y2[k] - y[k]) / dt - rhs[1]) < 1e-4
        assert abs((z2[k] - z[k]) / dt - rhs[2]) < 1e-4


def test_stereographic_pole_raises_with_guidance():
    with pytest.raises(ValueError):
        stereographic_limit_cycle(np.array([0.0]), 2.0, 1.0)


def test_correction_term_changes_flow():
    state = np.array([0.1, 0.3, -0.2])
    plain = bloch_rhs(state, 1.0, 0.5, 4)
    corrected = bloch_rhs(state, 1.0, 0.5, 4, include_correction=True)
    assert plain[2] != corrected[2]
    assert plain[0] == corrected[0] and plain[1] == corrected[1]
