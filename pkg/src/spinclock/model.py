"""Shared model parameters for the driven collective-emission clock.

A single parameter set describes N identical two-level atoms, resonantly
driven at Rabi frequency ``omega`` and decaying collectively at rate
``gamma``.  All dynamical modules (master equation, semiclassical limit,
conditioned trajectories) consume the same ``ModelParams`` record.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the driven Dicke model.

    Parameters
    ----------
    n_atoms : int
        Number of two-level atoms, N >= 1.
    omega : float
        Rabi drive amplitude (rad / time), >= 0.
    gamma : float
        Collective decay rate, > 0.
    phi : float
        Local-oscillator phase of the homodyne detector.  Only the
        conditioned dynamics depend on it.
    omega_a : float
        Atomic transition frequency entering energy bookkeeping as
        hbar * omega_a.  Dynamics in the rotating frame do not depend
        on it; default 1 sets the energy unit to one emitted quantum.
    """

    n_atoms: int
    omega: float
    gamma: float
    phi: float = 0.0
    omega_a: float = 1.0

    def __post_init__(self) -> None:
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.omega < 0:
            raise ValueError(f"omega must be non-negative, got {self.omega}")

    @property
    def j(self) -> float:
        """Total spin of the symmetric sector, j = N / 2."""
        return self.n_atoms / 2.0

    @property
    def omega0(self) -> float:
        """Semiclassical bifurcation threshold gamma * N / 2."""
        return self.gamma * self.n_atoms / 2.0

    @property
    def beta(self) -> float:
        """Drive strength relative to threshold, omega / omega0."""
        return self.omega / self.omega0
