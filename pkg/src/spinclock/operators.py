"""Collective spin operators on the symmetric (Dicke) subspace.

N identical two-level atoms coupled symmetrically to drive and decay stay
in the maximal-spin sector j = N/2, so every operator here is a dense
(N+1) x (N+1) matrix.  Basis convention used throughout the package:

    |j, m>  with  m = -j, -j+1, ..., +j,   index k = m + j,

i.e. index 0 is the ground state |j, -j> (all atoms down) and the last
index is |j, +j>.  Ladder matrix elements follow the standard su(2)
algebra,

    <j, m+1| J+ |j, m> = sqrt(j(j+1) - m(m+1)),

which fixes [Jx, Jy] = i Jz and cyclic permutations, the Casimir
Jx^2 + Jy^2 + Jz^2 = j(j+1) I, and the product identity
J+ J- = j(j+1) I - Jz^2 + Jz used by the energy bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CollectiveOps:
    """Dense collective operators for N atoms on the symmetric subspace.

    Attributes
    ----------
    n_atoms : int
        Number of atoms N.
    j : float
        Total spin, N / 2.
    dim : int
        Hilbert-space dimension N + 1.
    jx, jy, jz : ndarray
        Cartesian components, complex128, shape (dim, dim).
    jp, jm : ndarray
        Raising and lowering operators J+ and J-.
    jpjm : ndarray
        Precomputed product J+ J- (the collective emission rate operator).
    m_values : ndarray
        Jz eigenvalues in basis order, m = -j ... +j.
    """

    n_atoms: int
    j: float
    dim: int
    jx: np.ndarray = field(repr=False)
    jy: np.ndarray = field(repr=False)
    jz: np.ndarray = field(repr=False)
    jp: np.ndarray = field(repr=False)
    jm: np.ndarray = field(repr=False)
    jpjm: np.ndarray = field(repr=False)
    m_values: np.ndarray = field(repr=False)


def collective_ops(n_atoms: int) -> CollectiveOps:
    """Build the collective spin operators for ``n_atoms`` atoms.

    Parameters
    ----------
    n_atoms : int
        Number of atoms, >= 1.

    Returns
    -------
    CollectiveOps
        Frozen record of dense complex128 matrices.
    """
    if int(n_atoms) != n_atoms or n_atoms < 1:
        raise ValueError(f"n_atoms must be a positive integer, got {n_atoms}")
    n_atoms = int(n_atoms)
    j = n_atoms / 2.0
    dim = n_atoms + 1
    m = -j + np.arange(dim)

    jz = np.diag(m).astype(np.complex128)
    jp = np.zeros((dim, dim), dtype=np.complex128)
    # row = target state m+1, column = source state m: J+ is subdiagonal
    # in this ordering because index grows with m
    ladder = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp[np.arange(1, dim), np.arange(dim - 1)] = ladder
    jm = jp.conj().T
    jx = (jp + jm) / 2.0
    jy = (jp - jm) / 2.0j
    jpjm = jp @ jm

    return CollectiveOps(
        n_atoms=n_atoms, j=j, dim=dim,
        jx=jx, jy=jy, jz=jz, jp=jp, jm=jm, jpjm=jpjm,
        m_values=m,
    )


def ground_state(n_atoms: int) -> np.ndarray:
    """Return |j, -j> (every atom in its lower level) as a unit ket."""
    if int(n_atoms) != n_atoms or n_atoms < 1:
        raise ValueError(f"n_atoms must be a positive integer, got {n_atoms}")
    psi = np.zeros(int(n_atoms) + 1, dtype=np.complex128)
    psi[0] = 1.0
    return psi


def basis_state(n_atoms: int, m: float) -> np.ndarray:
    """Return the Dicke ket |j, m> for half-integer-compatible m."""
    j = n_atoms / 2.0
    k = m + j
    if abs(k - round(k)) > 1e-12 or not (0 <= round(k) <= n_atoms):
        raise ValueError(f"m={m} is not a Jz eigenvalue for N={n_atoms}")
    psi = np.zeros(n_atoms + 1, dtype=np.complex128)
    psi[int(round(k))] = 1.0
    return psi


def expectation(op: np.ndarray, state: np.ndarray) -> complex:
    """Expectation value of ``op`` in a pure or mixed ``state``.

    A 1-D array is treated as a ket (<psi|op|psi>), a 2-D array as a
    density matrix (Tr[op rho]).  No Hermiticity is assumed; callers
    take ``.real`` where appropriate.
    """
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    if state.ndim == 2:
        return complex(np.einsum("ij,ji->", op, state))
    raise ValueError(f"state must be a ket (1-D) or density matrix (2-D), got ndim={state.ndim}")


def density_matrix(psi: np.ndarray) -> np.ndarray:
    """Outer product |psi><psi| of a ket."""
    if psi.ndim != 1:
        raise ValueError("density_matrix expects a 1-D ket")
    return np.outer(psi, psi.conj())


def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Trace distance (1/2)||rho1 - rho2||_1 between Hermitian states."""
    diff = rho1 - rho2
    diff = (diff + diff.conj().T) / 2
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def check_density_matrix(rho: np.ndarray, tol: float = 1e-9) -> None:
    """Raise ValueError unless ``rho`` is Hermitian, unit-trace and PSD.

    Positivity is checked through the smallest eigenvalue of the
    Hermitian part, allowing -tol of numerical slack.
    """
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.linalg.norm(rho - rho.conj().T)
    if herm > tol:
        raise ValueError(f"density matrix not Hermitian: |rho - rho^dag| = {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace {tr} differs from 1")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if lo < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
