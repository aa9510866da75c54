"""Energy bookkeeping for the driven collective emitter.

With the atomic splitting hbar*omega_a as the energy unit, the drive
injects p_in = omega_a * Omega * <Jy> and collective emission carries
away p_out = omega_a * gamma * <J+ J->; their difference is exactly
omega_a * d<Jz>/dt (first law for this model).  Along a conditioned
trajectory the dissipated energy is the integral of p_out, and because
each clock cycle radiates a nearly fixed amount, the per-cycle
dissipation grows linearly with the cycle duration: a clock that ticks
is a clock that pays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.stats import linregress

from .liouvillian import apply_liouvillian
from .model import ModelParams
from .operators import CollectiveOps
from .trajectories import TrajectoryRecord


def power_balance(jy: np.ndarray, jpjm: np.ndarray,
                  params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Input and output power for given <Jy> and <J+J-> values."""
    p_in = params.omega_a * params.omega * np.asarray(jy, dtype=float)
    p_out = params.omega_a * params.gamma * np.asarray(jpjm, dtype=float)
    return p_in, p_out


def power_balance_residual(ops: CollectiveOps, params: ModelParams,
                           rho: np.ndarray) -> float:
    """|omega_a Tr[Jz L rho] - (p_in - p_out)| for a state rho.

    Zero up to roundoff for any state: the balance is an operator
    identity of the generator, not a property of special states.
    """
    drho = apply_liouvillian(ops, params, rho)
    dedt_direct = params.omega_a * np.einsum("ij,ji->", ops.jz, drho).real
    jy = np.einsum("ij,ji->", ops.jy, rho).real
    jpjm = np.einsum("ij,ji->", ops.jpjm, rho).real
    p_in, p_out = power_balance(jy, jpjm, params)
    return float(abs(dedt_direct - (p_in - p_out)))


@dataclass
class EnergyLedger:
    """Power flows and accumulated dissipation along one trajectory."""

    t: np.ndarray
    p_in: np.ndarray
    p_out: np.ndarray
    e_dis: np.ndarray


def energy_ledger(record: TrajectoryRecord, params: ModelParams) -> EnergyLedger:
    """Integrate the emission power of a conditioned trajectory.

    e_dis(t) = omega_a * gamma * int_0^t <J+J->_c dt' by the trapezoid
    rule; non-decreasing because the integrand is a positive operator's
    expectation.
    """
    p_in, p_out = power_balance(record.jy_c, record.jpjm_c, params)
    e_dis = cumulative_trapezoid(p_out, record.t, initial=0.0)
    return EnergyLedger(t=record.t, p_in=p_in, p_out=p_out, e_dis=e_dis)


def cycle_dissipation(ledger: EnergyLedger, edges: np.ndarray) -> np.ndarray:
    """Energy dissipated within each clock cycle.

    ``edges`` are falling-edge times from the period extraction; the
    k-th entry is e_dis(edge[k+1]) - e_dis(edge[k]) with the ledger
    linearly interpolated at the edge times, aligned with the periods
    from the same edges.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.size and (edges[0] < ledger.t[0] or edges[-1] > ledger.t[-1]):
        raise ValueError("edges fall outside the recorded time range")
    at_edges = np.interp(edges, ledger.t, ledger.e_dis)
    return np.diff(at_edges)


@dataclass(frozen=True)
class DissipationFit:
    """OLS fit of per-cycle dissipation against cycle duration."""

    slope: float
    intercept: float
    pearson_r: float
    n_cycles: int


def dissipation_fit(periods: np.ndarray, delta_e: np.ndarray) -> DissipationFit:
    """Regress per-cycle dissipated energy on the cycle period."""
    periods = np.asarray(periods, dtype=float)
    delta_e = np.asarray(delta_e, dtype=float)
    if periods.shape != delta_e.shape or periods.ndim != 1:
        raise ValueError("periods and delta_e must be 1-D arrays of equal length")
    if periods.size < 3:
        raise ValueError(f"need at least 3 cycles to fit, got {periods.size}")
    res = linregress(periods, delta_e)
    return DissipationFit(slope=float(res.slope), intercept=float(res.intercept),
                          pearson_r=float(res.rvalue), n_cycles=periods.size)
