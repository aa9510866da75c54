"""Quantum clock from collective resonance fluorescence.

Simulation and analysis toolkit for N driven two-level atoms decaying
collectively: unconditional master-equation dynamics, homodyne-conditioned
trajectories, the semiclassical limit with its Hopf bifurcation, clock
period statistics, kinetic uncertainty relations, and energy bookkeeping.
"""

from .model import ModelParams
from .operators import CollectiveOps, collective_ops, expectation, ground_state

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "CollectiveOps",
    "collective_ops",
    "expectation",
    "ground_state",
    "__version__",
]


def __getattr__(name):
    # Heavier submodule entry points, imported on demand.
    if name in ("SmeConfig", "simulate_ensemble", "simulate_trajectory"):
        from . import trajectories

        return getattr(trajectories, name)
    if name in ("steady_state_exact", "steady_state_numeric"):
        from . import liouvillian as _liouvillian

        return getattr(_liouvillian, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
