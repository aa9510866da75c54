"""Unconditional master equation for driven collective emission.

The density matrix of the symmetric sector evolves under

    drho/dt = -i Omega [Jx, rho] + gamma D[J-] rho =: L rho,
    D[A] rho = A rho A^dag - 1/2 {A^dag A, rho}.

This module builds L as a dense (dim^2 x dim^2) matrix acting on
row-major vectorized states, splits it into the two one-sided pieces
used by the uncertainty-relation bookkeeping, solves for the steady
state both exactly (nested ladder-operator sum) and numerically (null
space), and applies the Drazin inverse through a constrained linear
solve.  Vectorization convention: vec(rho) = rho.reshape(-1), so
vec(A rho B) = (A kron B^T) vec(rho).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .model import ModelParams
from .operators import CollectiveOps


def vec(rho: np.ndarray) -> np.ndarray:
    """Row-major vectorization of a (dim, dim) matrix."""
    return rho.reshape(-1)


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return v.reshape(dim, dim)


def left_mult(a: np.ndarray) -> np.ndarray:
    """Superoperator for rho -> a rho."""
    return np.kron(a, np.eye(a.shape[0], dtype=a.dtype))


def right_mult(b: np.ndarray) -> np.ndarray:
    """Superoperator for rho -> rho b."""
    return np.kron(np.eye(b.shape[0], dtype=b.dtype), b.T)


def sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator for rho -> a rho b."""
    return np.kron(a, b.T)


def liouvillian(ops: CollectiveOps, params: ModelParams) -> np.ndarray:
    """Dense Liouvillian matrix of the driven-emission master equation."""
    om, g = params.omega, params.gamma
    ham = -1j * om * (left_mult(ops.jx) - right_mult(ops.jx))
    diss = g * (sandwich(ops.jm, ops.jp)
                - 0.5 * (left_mult(ops.jpjm) + right_mult(ops.jpjm)))
    return ham + diss


def liouvillian_parts(ops: CollectiveOps, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """One-sided split L = L1 + L2 entering the coherence correction.

    L1 rho = -i Omega Jx rho + gamma/2 (J- rho J+ - J+J- rho) collects
    every term whose fixed operator stands to the *left* of rho; L2 is
    its image under Hermitian conjugation (fixed operators on the
    right, drive term +i Omega rho Jx).  Their sum reproduces
    :func:`liouvillian` identically.
    """
    om, g = params.omega, params.gamma
    half_sand = 0.5 * g * sandwich(ops.jm, ops.jp)
    l1 = -1j * om * left_mult(ops.jx) + half_sand - 0.5 * g * left_mult(ops.jpjm)
    l2 = 1j * om * right_mult(ops.jx) + half_sand - 0.5 * g * right_mult(ops.jpjm)
    return l1, l2


def apply_liouvillian(ops: CollectiveOps, params: ModelParams, rho: np.ndarray) -> np.ndarray:
    """L rho evaluated directly with matrix products (no superoperator)."""
    om, g = params.omega, params.gamma
    comm = ops.jx @ rho - rho @ ops.jx
    diss = ops.jm @ rho @ ops.jp - 0.5 * (ops.jpjm @ rho + rho @ ops.jpjm)
    return -1j * om * comm + g * diss


def evolve(liouv: np.ndarray, rho0: np.ndarray, t_grid: np.ndarray,
           method: str = "expm", rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Propagate rho0 along ``t_grid`` under the master equation.

    Parameters
    ----------
    liouv : ndarray
        Dense Liouvillian, shape (dim^2, dim^2).
    rho0 : ndarray
        Initial density matrix, shape (dim, dim).
    t_grid : ndarray
        Non-negative, strictly increasing sample times.
    method : str
        "expm" steps with cached matrix exponentials (exact for the
        linear flow), "ode" integrates vec(rho) with an adaptive
        Runge-Kutta scheme at tolerances (rtol, atol).

    Returns
    -------
    ndarray
        Stack of density matrices, shape (len(t_grid), dim, dim).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D array")
    if t_grid[0] < 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be non-negative and strictly increasing")
    dim = rho0.shape[0]
    if liouv.shape != (dim * dim, dim * dim):
        raise ValueError("Liouvillian shape does not match rho0")

    if method == "expm":
        out = np.empty((t_grid.size, dim, dim), dtype=np.complex128)
        v = vec(rho0.astype(np.complex128))
        prev_t = 0.0
        cache: dict[float, np.ndarray] = {}
        for k, t in enumerate(t_grid):
            dt = t - prev_t
            if dt > 0:
                key = round(dt, 15)
                if key not in cache:
                    cache[key] = scipy.linalg.expm(liouv * dt)
                v = cache[key] @ v
            out[k] = unvec(v, dim)
            prev_t = t
        return out

    if method == "ode":
        sol = solve_ivp(lambda _t, y: liouv @ y, (0.0, float(t_grid[-1])),
                        vec(rho0.astype(np.complex128)),
                        t_eval=t_grid, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"master-equation integration failed: {sol.message}")
        return sol.y.T.reshape(t_grid.size, dim, dim)

    raise ValueError(f"unknown method {method!r}, expected 'expm' or 'ode'")


def steady_state_numeric(liouv: np.ndarray, gap_tol: float = 1e-8) -> np.ndarray:
    """Steady state from the null space of the Liouvillian.

    Takes the eigenvector of the smallest-magnitude eigenvalue,
    Hermitizes and normalizes it.  Raises RuntimeError when a second
    eigenvalue sits within ``gap_tol`` of zero (degenerate null space).
    """
    evals, evecs = np.linalg.eig(liouv)
    order = np.argsort(np.abs(evals))
    if np.abs(evals[order[1]]) < gap_tol:
        raise RuntimeError(
            "Liouvillian null space is degenerate: two eigenvalues "
            f"of magnitude {np.abs(evals[order[:2]])} below {gap_tol}")
    dim = int(round(np.sqrt(liouv.shape[0])))
    rho = unvec(evecs[:, order[0]], dim)
    rho = (rho + rho.conj().T) / 2.0
    tr = np.trace(rho).real
    if abs(tr) < 1e-300:
        raise RuntimeError("null-space vector has vanishing trace")
    return rho / tr


def steady_state_exact(ops: CollectiveOps, params: ModelParams) -> np.ndarray:
    """Closed-form steady state as a nested sum over ladder powers.

    Builds rho_ss propto sum_{m,n=0}^{2J} (-i Omega/gamma)^{2J-m}
    (i Omega/gamma)^{2J-n} J-^m J+^n with every factor tracked through
    a log-magnitude scale so that large N and large Omega/gamma neither
    overflow nor underflow; normalization is fixed by the unit trace at
    the end.  The phase assignment is pinned by L rho_ss = 0 (the
    conjugate choice is stationary for the opposite drive sign).
    """
    dim = ops.dim
    two_j = ops.n_atoms
    if params.omega == 0.0:
        rho = np.zeros((dim, dim), dtype=np.complex128)
        rho[0, 0] = 1.0  # undriven atoms relax to |j, -j>
        return rho

    r = params.omega / params.gamma
    log_r = np.log(r)

    # scaled powers of the ladder operators with their log scales
    p_mats = [np.eye(dim, dtype=np.complex128)]
    p_logs = [0.0]
    for _ in range(two_j):
        raw = ops.jm @ p_mats[-1]
        s = np.abs(raw).max()
        p_mats.append(raw / s)
        p_logs.append(p_logs[-1] + np.log(s))
    q_mats = [np.eye(dim, dtype=np.complex128)]
    q_logs = [0.0]
    for _ in range(two_j):
        raw = q_mats[-1] @ ops.jp
        s = np.abs(raw).max()
        q_mats.append(raw / s)
        q_logs.append(q_logs[-1] + np.log(s))

    mm, nn = np.meshgrid(np.arange(two_j + 1), np.arange(two_j + 1), indexing="ij")
    log_mag = (4 * two_j - mm - nn) * log_r + np.array(p_logs)[mm] + np.array(q_logs)[nn]
    log_max = log_mag.max()
    # phases (-i)^(2J-m) * i^(2J-n) = exp(i pi/2 (m - n)); the opposite
    # assignment leaves a nonzero L rho residual for every N
    phase = np.exp(0.5j * np.pi * (mm - nn))

    acc = np.zeros((dim, dim), dtype=np.complex128)
    for m in range(two_j + 1):
        for n in range(two_j + 1):
            w = np.exp(log_mag[m, n] - log_max)
            if w == 0.0:
                continue  # negligible against the dominant term
            acc += (w * phase[m, n]) * (p_mats[m] @ q_mats[n])

    acc = (acc + acc.conj().T) / 2.0
    tr = np.trace(acc).real
    if tr <= 0:
        raise RuntimeError("exact steady-state sum produced a non-positive trace")
    return acc / tr


def liouvillian_spectrum(liouv: np.ndarray) -> np.ndarray:
    """Eigenvalues sorted by descending real part (slowest first)."""
    evals = np.linalg.eigvals(liouv)
    return evals[np.argsort(-evals.real)]


class DrazinSolver:
    """Drazin inverse of a Liouvillian with a unique steady state.

    X = Ldrazin A is defined by L X = Q A, Q X = X with the projector
    Q A = A - rho_ss Tr[A] onto the traceless subspace.  Because vec(I)
    spans the left null space and vec(rho_ss) the right one, the
    bordered operator M = L + vec(rho_ss) vec(I)^T is invertible and
    M^{-1} vec(Q A) solves the constrained system; M is LU-factorized
    once so repeated applications are cheap.
    """

    def __init__(self, liouv: np.ndarray, rho_ss: np.ndarray):
        self.dim = rho_ss.shape[0]
        if liouv.shape != (self.dim ** 2, self.dim ** 2):
            raise ValueError("Liouvillian shape does not match rho_ss")
        self.liouv = liouv
        self.rho_ss = rho_ss
        ident = vec(np.eye(self.dim, dtype=np.complex128))
        bordered = liouv + np.outer(vec(rho_ss), ident)
        self._lu = scipy.linalg.lu_factor(bordered)

    def apply(self, a: np.ndarray, residual_tol: float = 1e-9,
              trace_tol: float = 1e-10) -> np.ndarray:
        """Return X = Ldrazin a, verifying the defining residuals."""
        qa = a - self.rho_ss * np.trace(a)
        x = scipy.linalg.lu_solve(self._lu, vec(qa))
        resid = np.linalg.norm(self.liouv @ x - vec(qa))
        tr = abs(np.sum(x.reshape(self.dim, self.dim).diagonal()))
        if resid > residual_tol or tr > trace_tol:
            raise RuntimeError(
                f"Drazin solve failed: |L X - Q A| = {resid:.3e}, |Tr X| = {tr:.3e}")
        return unvec(x, self.dim)


def drazin_apply(liouv: np.ndarray, rho_ss: np.ndarray, a: np.ndarray) -> np.ndarray:
    """One-shot Drazin application; see :class:`DrazinSolver`."""
    return DrazinSolver(liouv, rho_ss).apply(a)
