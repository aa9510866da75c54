"""Mean-field limit of the driven collective-emission model.

Scaled first moments (X, Y, Z) = (Re<J+>, Im<J+>, <Jz>) / N obey

    dX/dt = gamma N Z X,
    dY/dt = -Omega Z + gamma N Y Z,
    dZ/dt =  Omega Y - gamma N (1/4 - Z^2)  [- gamma/4 (1 + 2Z)^2],

where the bracketed finite-size correction is off by default.  On the
invariant sphere X^2 + Y^2 + Z^2 = 1/4 the flow restricted to X = 0 is a
single angle theta (Y = sin(theta)/2, Z = cos(theta)/2) with

    dtheta/dt = -Omega + Omega_0 sin(theta),    Omega_0 = gamma N / 2.

Below threshold (Omega < Omega_0) the angle locks to a stable fixed
point; above it the phase runs forever: a limit cycle at frequency
omega = sqrt(Omega^2 - Omega_0^2), born in a Hopf-like bifurcation at
Omega = Omega_0.  Both the running-phase closed form theta(t) and its
stereographic image u = tan(theta/2) are provided for use as oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp


def hopf_threshold(gamma: float, n_atoms: int) -> float:
    """Drive amplitude at which the fixed point gives way to the cycle."""
    if gamma <= 0 or n_atoms < 1:
        raise ValueError("gamma must be positive and n_atoms >= 1")
    return gamma * n_atoms / 2.0


def limit_cycle_frequency(omega: float, omega0: float) -> float:
    """Oscillation frequency sqrt(Omega^2 - Omega_0^2) above threshold."""
    if omega <= omega0:
        raise ValueError(
            f"no limit cycle below threshold: omega={omega} <= omega0={omega0}")
    return float(np.sqrt(omega ** 2 - omega0 ** 2))


def stable_fixed_point(omega: float, omega0: float) -> np.ndarray:
    """Attracting rest point (0, Y*, Z*) of the sub-threshold flow.

    sin(theta*) = Omega/Omega_0 has two roots on the circle; the one
    with cos(theta*) < 0 is stable, which puts Z* below the equator.
    """
    if omega0 <= 0 or omega >= omega0:
        raise ValueError(
            f"fixed point requires 0 <= omega < omega0, got omega={omega}, omega0={omega0}")
    s = omega / omega0
    return np.array([0.0, s / 2.0, -np.sqrt(1.0 - s ** 2) / 2.0])


def bloch_rhs(state: np.ndarray, omega: float, gamma: float, n_atoms: int,
              include_correction: bool = False) -> np.ndarray:
    """Time derivative of the scaled Bloch vector (X, Y, Z)."""
    x, y, z = state
    gn = gamma * n_atoms
    dx = gn * z * x
    dy = -omega * z + gn * y * z
    dz = omega * y - gn * (0.25 - z * z)
    if include_correction:
        dz -= 0.25 * gamma * (1.0 + 2.0 * z) ** 2
    return np.array([dx, dy, dz])


@dataclass
class BlochTrajectory:
    """Sampled mean-field trajectory."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @property
    def theta(self) -> np.ndarray:
        """Continuous phase in the Y-Z plane, unwrapped across branch cuts."""
        return np.unwrap(np.arctan2(self.y, self.z))

    @property
    def sphere_error(self) -> float:
        """Largest deviation of X^2+Y^2+Z^2 from the invariant value 1/4."""
        return float(np.abs(self.x ** 2 + self.y ** 2 + self.z ** 2 - 0.25).max())


def integrate_bloch(omega: float, gamma: float, n_atoms: int,
                    t_grid: np.ndarray,
                    x0: np.ndarray | None = None,
                    include_correction: bool = False,
                    rtol: float = 1e-10, atol: float = 1e-12) -> BlochTrajectory:
    """Integrate the mean-field equations along ``t_grid``.

    Parameters
    ----------
    omega, gamma, n_atoms : float, float, int
        Model parameters.
    t_grid : ndarray
        Strictly increasing sample times starting at the initial time.
    x0 : ndarray, optional
        Initial (X, Y, Z); defaults to the equator point (0, 1/2, 0),
        i.e. theta(0) = pi/2 on the invariant sphere.
    include_correction : bool
        Include the finite-size 1/N correction in dZ/dt.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing with >= 2 samples")
    if x0 is None:
        x0 = np.array([0.0, 0.5, 0.0])
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (3,):
        raise ValueError(f"x0 must have shape (3,), got {x0.shape}")

    sol = solve_ivp(
        lambda _t, s: bloch_rhs(s, omega, gamma, n_atoms, include_correction),
        (float(t_grid[0]), float(t_grid[-1])), x0,
        t_eval=t_grid, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"mean-field integration failed: {sol.message}")
    return BlochTrajectory(t=sol.t, x=sol.y[0], y=sol.y[1], z=sol.y[2])


def measured_cycle_period(omega: float, gamma: float, n_atoms: int,
                          n_cycles: int = 6, transient: float = 0.0,
                          rtol: float = 1e-11, atol: float = 1e-13) -> float:
    """Limit-cycle period from Poincare returns of the mean-field flow.

    Integrates from the equator point and times falling crossings of
    Z = 0, discarding the first; raises RuntimeError if the flow stops
    crossing (no cycle, e.g. below threshold).
    """
    omega0 = hopf_threshold(gamma, n_atoms)
    horizon = transient + (n_cycles + 2) * (
        2 * np.pi / limit_cycle_frequency(omega, omega0) if omega > omega0
        else 20.0 / max(gamma, 1e-6))

    def events(_t: float, s: np.ndarray) -> float:
        return s[2]
    events.direction = -1.0
    sol = solve_ivp(
        lambda _t, s: bloch_rhs(s, omega, gamma, n_atoms),
        (0.0, horizon), np.array([0.0, 0.5, 0.0]),
        method="DOP853", rtol=rtol, atol=atol, events=events, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"mean-field integration failed: {sol.message}")
    crossings = sol.t_events[0]
    crossings = crossings[crossings > transient]
    if crossings.size < n_cycles + 1:
        raise RuntimeError(
            f"only {crossings.size} falling crossings found; no sustained cycle")
    periods = np.diff(crossings)[-n_cycles:]
    return float(periods.mean())


def theta_solution(t: np.ndarray, omega: float, omega0: float,
                   theta0: float = np.pi / 2) -> np.ndarray:
    """Closed-form running phase above threshold.

    theta(t) = 2 arctan[a - b tan(omega_lc (t - K)/2)] continued across
    the tangent branch cuts so the result decreases monotonically, with
    a = Omega_0/Omega, b = sqrt(1 - a^2), omega_lc = Omega b, and the
    time shift K fixed by theta(0) = theta0.

    Parameters
    ----------
    t : ndarray or float
        Sample times.
    omega, omega0 : float
        Drive amplitude and threshold; requires omega > omega0 >= 0.
    theta0 : float
        Initial phase in the open interval (-pi, pi).
    """
    if omega0 < 0 or omega <= omega0:
        raise ValueError(
            f"running phase requires omega > omega0 >= 0, got {omega}, {omega0}")
    if not -np.pi < theta0 < np.pi:
        raise ValueError(f"theta0 must lie in (-pi, pi), got {theta0}")
    a = omega0 / omega
    b = np.sqrt(1.0 - a * a)
    w = omega * b
    k_shift = -(2.0 / w) * np.arctan((a - np.tan(theta0 / 2.0)) / b)

    t = np.asarray(t, dtype=float)
    base = 0.5 * w * (t - k_shift)
    branch = np.floor(base / np.pi + 0.5)
    return 2.0 * np.arctan(a - b * np.tan(base)) - 2.0 * np.pi * branch


def stereographic_limit_cycle(t: np.ndarray, omega: float, omega0: float,
                              pole_tol: float = 1e-9) -> np.ndarray:
    """Stereographic coordinate u = tan(theta/2) on the limit cycle.

    u(t) = Im[(mu + mu* e^{i omega_lc t}) / (1 - cos(omega_lc t))] with
    mu = b + i a; equivalently u = a + b cot(omega_lc t / 2).  Mapping
    back through Y = u/(1+u^2), Z = (1-u^2)/(2(1+u^2)) lands on the
    invariant circle Y^2 + Z^2 = 1/4 and reproduces the mean-field
    orbit up to a time shift.

    Raises
    ------
    ValueError
        If any sample sits within ``pole_tol`` of a pole omega_lc t = 2 pi k
        (where the orbit passes through theta = +-pi); the message names
        the nearest valid time.
    """
    if omega0 < 0 or omega <= omega0:
        raise ValueError(
            f"running phase requires omega > omega0 >= 0, got {omega}, {omega0}")
    a = omega0 / omega
    b = np.sqrt(1.0 - a * a)
    w = omega * b
    mu = b + 1j * a

    t = np.asarray(t, dtype=float)
    phase = w * t
    dist = np.abs(phase / (2 * np.pi) - np.round(phase / (2 * np.pi))) * 2 * np.pi / w
    bad = np.flatnonzero(dist < pole_tol)
    if bad.size:
        t_bad = float(np.atleast_1d(t)[bad[0]])
        period = 2 * np.pi / w
        t_ok = (np.round(t_bad / period) + 0.5) * period
        raise ValueError(
            f"u(t) has a pole at every multiple of 2 pi / omega_lc = {period:.6g}; "
            f"t = {t_bad:.6g} is within {pole_tol} of one (nearest valid "
            f"sample: t = {t_ok:.6g})")
    return np.imag((mu + np.conj(mu) * np.exp(1j * phase)) / (1.0 - np.cos(phase)))


def limit_cycle_from_u(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map the stereographic coordinate back to (Y, Z) on the circle."""
    u = np.asarray(u, dtype=float)
    denom = 1.0 + u * u
    return u / denom, (1.0 - u * u) / (2.0 * denom)
