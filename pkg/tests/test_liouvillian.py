"""Superoperator construction, propagation, and steady states."""

import numpy as np
import pytest

from spinclock.liouvillian import (
    DrazinSolver,
    apply_liouvillian,
    drazin_apply,
    evolve,
    liouvillian,
    liouvillian_parts,
    liouvillian_spectrum,
    steady_state_exact,
    steady_state_numeric,
    unvec,
    vec,
)
from spinclock.model import ModelParams
from spinclock.operators import (
    collective_ops,
    density_matrix,
    expectation,
    ground_state,
    trace_distance,
)


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_vec_unvec_roundtrip():
    rng = np.random.default_rng(0)
    rho = random_density(rng, 4)
    assert np.array_equal(unvec(vec(rho), 4), rho)
    # row-major convention: vec stacks rows
    assert vec(rho)[1] == rho[0, 1]


def test_liouvillian_matches_direct_action():
    rng = np.random.default_rng(1)
    params = ModelParams(n_atoms=3, omega=1.3, gamma=0.7)
    ops = collective_ops(3)
    liouv = liouvillian(ops, params)
    rho = random_density(rng, ops.dim)

    direct = (-1j * params.omega * (ops.jx @ rho - rho @ ops.jx)
              + params.gamma * (ops.jm @ rho @ ops.jp
                                - 0.5 * (ops.jpjm @ rho + rho @ ops.jpjm)))
    assert np.allclose(unvec(liouv @ vec(rho), ops.dim), direct, atol=1e-13)
    assert np.allclose(apply_liouvillian(ops, params, rho), direct, atol=1e-13)


def test_liouvillian_preserves_trace_and_hermiticity():
    rng = np.random.default_rng(2)
    params = ModelParams(n_atoms=4, omega=0.8, gamma=1.1)
    ops = collective_ops(4)
    rho = random_density(rng, ops.dim)
    lrho = apply_liouvillian(ops, params, rho)
    assert abs(np.trace(lrho)) < 1e-13
    assert np.allclose(lrho, lrho.conj().T, atol=1e-13)


def test_split_parts_sum_to_liouvillian():
    params = ModelParams(n_atoms=3, omega=2.0, gamma=0.5)
    ops = collective_ops(3)
    l1, l2 = liouvillian_parts(ops, params)
    assert np.array_equal(l1 + l2, liouvillian(ops, params))


def test_evolve_expm_matches_ode():
    params = ModelParams(n_atoms=3, omega=1.5, gamma=0.4)
    ops = collective_ops(3)
    liouv = liouvillian(ops, params)
    rho0 = density_matrix(ground_state(3))
    t = np.linspace(0.0, 4.0, 9)
    by_expm = evolve(liouv, rho0, t, method="expm")
    by_ode = evolve(liouv, rho0, t, method="ode")
    assert max(trace_distance(a, b) for a, b in zip(by_expm, by_ode)) < 1e-8
    for rho in by_expm:
        assert abs(np.trace(rho) - 1) < 1e-12
        assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_evolve_rejects_unknown_method():
    params = ModelParams(n_atoms=2, omega=1.0, gamma=1.0)
    ops = collective_ops(2)
    rho0 = density_matrix(ground_state(2))
    with pytest.raises(ValueError):
        evolve(liouvillian(ops, params), rho0, np.array([0.0, 1.0]), method="magic")


@pytest.mark.parametrize("n,beta", [(2, 0.5), (2, 2.0), (5, 0.5), (5, 2.0)])
def test_exact_steady_state_matches_nullspace(n, beta):
    gamma = 0.8
    omega0 = gamma * n / 2
    params = ModelParams(n_atoms=n, omega=beta * omega0, gamma=gamma)
    ops = collective_ops(n)
    exact = steady_state_exact(ops, params)
    numeric = steady_state_numeric(liouvillian(ops, params))
    assert trace_distance(exact, numeric) < 1e-10


def test_exact_steady_state_is_stationary():
    params = ModelParams(n_atoms=6, omega=1.7, gamma=0.3)
    ops = collective_ops(6)
    rho = steady_state_exact(ops, params)
    assert np.linalg.norm(apply_liouvillian(ops, params, rho)) < 1e-11
    assert abs(np.trace(rho) - 1) < 1e-12


def test_exact_steady_state_without_drive_is_ground_projector():
    params = ModelParams(n_atoms=4, omega=0.0, gamma=1.0)
    ops = collective_ops(4)
    rho = steady_state_exact(ops, params)
    assert trace_distance(rho, density_matrix(ground_state(4))) < 1e-14


def test_spectrum_contains_zero_with_nonpositive_real_parts():
    params = ModelParams(n_atoms=3, omega=1.0, gamma=1.0)
    ops = collective_ops(3)
    eigs = liouvillian_spectrum(liouvillian(ops, params))
    assert min(abs(eigs)) < 1e-12
    assert eigs.real.max() < 1e-12


def test_drazin_solver_residuals_and_projection():
    rng = np.random.default_rng(3)
    params = ModelParams(n_atoms=3, omega=1.2, gamma=0.9)
    ops = collective_ops(3)
    liouv = liouvillian(ops, params)
    rho_ss = steady_state_exact(ops, params)
    solver = DrazinSolver(liouv, rho_ss)

    a = rng.normal(size=(ops.dim, ops.dim)) + 1j * rng.normal(size=(ops.dim, ops.dim))
    x = solver.apply(a)
    qa = a - rho_ss * np.trace(a)
    assert np.linalg.norm(liouv @ vec(x) - vec(qa)) < 1e-9
    assert abs(np.trace(x)) < 1e-10
    # the steady state itself lies in the kernel of the projector
    assert np.linalg.norm(solver.apply(rho_ss)) < 1e-10
    # one-shot helper agrees with the cached solver
    assert np.allclose(drazin_apply(liouv, rho_ss, a), x)


def test_drazin_solver_shape_mismatch():
    params = ModelParams(n_atoms=2, omega=1.0, gamma=1.0)
    ops = collective_ops(2)
    with pytest.raises(ValueError):
        DrazinSolver(liouvillian(ops, params), np.eye(4) / 4)
