"""Request and response schemas for the run service.

Each CLI subcommand maps to one request model.  The models hold the
resolved, validated configuration; everything downstream (runners, file
writers) consumes these rather than raw dicts.
"""

from __future__ import annotations

import logging
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

logger = logging.getLogger(__name__)


class ModelSpec(BaseModel):
    """Physical parameters of the driven collective spin.

    Either ``n_atoms`` or ``j`` may be given (j = n_atoms/2); if both are
    present they must agree.
    """

    n_atoms: Optional[int] = Field(default=None, ge=1)
    j: Optional[float] = Field(default=None, gt=0)
    omega: float = Field(ge=0)
    gamma: float = Field(gt=0)
    phi: float = 0.0
    omega_a: float = 1.0

    @model_validator(mode="after")
    def _resolve_n(self) -> "ModelSpec":
        if self.n_atoms is None and self.j is None:
            raise ValueError("one of n_atoms or j is required")
        if self.j is not None:
            n_from_j = 2 * self.j
            if abs(n_from_j - round(n_from_j)) > 1e-12:
                raise ValueError(f"j={self.j} does not correspond to an integer atom number")
            n_from_j = int(round(n_from_j))
            if self.n_atoms is None:
                logger.info("resolved n_atoms=%d from j=%s", n_from_j, self.j)
                object.__setattr__(self, "n_atoms", n_from_j)
            elif self.n_atoms != n_from_j:
                raise ValueError(f"n_atoms={self.n_atoms} and j={self.j} disagree (need j = n_atoms/2)")
        return self

    def to_params(self):
        from ..model import ModelParams

        return ModelParams(
            n_atoms=int(self.n_atoms),
            omega=self.omega,
            gamma=self.gamma,
            phi=self.phi,
            omega_a=self.omega_a,
        )


class SimSpec(BaseModel):
    """Time-stepping parameters for the diffusive unravelling."""

    dt: float = Field(default=1e-3, gt=0)
    t_final: float = Field(gt=0)
    record_stride: int = Field(default=1, ge=1)
    engine: Literal["pure", "density"] = "pure"


class ClockSpec(BaseModel):
    """Threshold-crossing settings for period extraction."""

    hysteresis: float = Field(default=0.25, ge=0, lt=0.5)
    discard_transient: int = Field(default=2, ge=0)


class SteadyStateRequest(BaseModel):
    """Sweep the exact steady state over a grid of beta = omega/omega0."""

    n_atoms: int = Field(ge=1)
    gamma: float = Field(gt=0)
    beta_grid: list[float]

    @model_validator(mode="after")
    def _check_grid(self) -> "SteadyStateRequest":
        if not self.beta_grid:
            raise ValueError("beta_grid must be non-empty")
        if any(b < 0 for b in self.beta_grid):
            raise ValueError("beta values must be nonnegative")
        return self


class SemiclassicalRequest(BaseModel):
    """Integrate the mean-field Bloch flow on a uniform time grid."""

    model: ModelSpec
    t_final: float = Field(gt=0)
    dt: float = Field(default=1e-3, gt=0)
    x0: Optional[list[float]] = None
    include_correction: bool = False

    @model_validator(mode="after")
    def _check_x0(self) -> "SemiclassicalRequest":
        if self.x0 is not None and len(self.x0) != 3:
            raise ValueError("x0 must have three components")
        return self


class TrajectoryRequest(BaseModel):
    """Simulate a single conditioned trajectory, optionally with the
    semiclassical orbit interpolated onto the same grid."""

    model: ModelSpec
    sim: SimSpec
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    traj_index: int = Field(default=0, ge=0)
    overlay_semiclassical: bool = False


class EnsembleRequest(BaseModel):
    """Simulate many trajectories; report moment curves and pooled
    clock-period statistics."""

    model: ModelSpec
    sim: SimSpec
    clock: ClockSpec = ClockSpec()
    n_traj: int = Field(ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)


class PrecisionSweepRequest(BaseModel):
    """Clock precision versus omega0/omega at fixed drive frequency.

    Each grid point keeps omega fixed and sets gamma = 2*ratio*omega/n so
    that omega0/omega equals the requested ratio.
    """

    n_list: list[int]
    ratio_grid: list[float]
    omega: float = Field(gt=0)
    sim: SimSpec
    clock: ClockSpec = ClockSpec()
    n_traj: int = Field(ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_grid(self) -> "PrecisionSweepRequest":
        if not self.n_list or not self.ratio_grid:
            raise ValueError("n_list and ratio_grid must be non-empty")
        if any(n < 1 for n in self.n_list):
            raise ValueError("atom numbers must be positive")
        if any(not 0 < r < 1 for r in self.ratio_grid):
            raise ValueError("ratios must lie in (0, 1) to stay above threshold")
        return self


class KurRequest(BaseModel):
    """Activity/coherence bounds plus simulated clock ratios over an
    omega grid at fixed N and gamma."""

    n_atoms: int = Field(ge=1)
    gamma: float = Field(gt=0)
    omega_grid: list[float]
    sim: SimSpec
    clock: ClockSpec = ClockSpec()
    n_traj: int = Field(ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_grid(self) -> "KurRequest":
        if not self.omega_grid:
            raise ValueError("omega_grid must be non-empty")
        if any(w <= 0 for w in self.omega_grid):
            raise ValueError("omega values must be positive")
        return self


class ThermoRequest(BaseModel):
    """Per-cycle dissipated energy versus period over an ensemble."""

    model: ModelSpec
    sim: SimSpec
    clock: ClockSpec = ClockSpec()
    n_traj: int = Field(ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)


class RunResult(BaseModel):
    """Uniform response envelope for every run endpoint."""

    command: str
    version: str
    wall_time_s: float
    output_dir: str
    files: dict[str, str]
    summary: dict
    config: dict
