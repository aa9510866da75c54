"""Clock readout: binary signal, tick periods, precision statistics.

The conditioned ⟨Jz⟩ oscillates above threshold; thresholding it turns a
trajectory into a square-wave clock signal s(t) = (sign⟨Jz⟩ + 1)/2.
Because the diffusive record makes ⟨Jz⟩ jitter near zero, period
extraction uses a Schmitt trigger by default: the signal flips high
only above +h*j and low only below -h*j (h = 0 recovers the literal
sign definition).  A tick is a falling edge; periods are differences of
consecutive falling-edge times, linearly interpolated between samples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


def clock_signal(jz: np.ndarray, j: float, hysteresis: float = 0.25) -> np.ndarray:
    """Binary clock signal from a conditioned ⟨Jz⟩ series.

    Parameters
    ----------
    jz : ndarray
        Conditioned ⟨Jz⟩ samples.
    j : float
        Total spin, sets the threshold scale (thresholds at +-h*j).
    hysteresis : float
        Threshold fraction h in [0, 1).  h = 0 returns the literal
        (sign(jz)+1)/2, which is 1/2 at exact zeros; h > 0 runs a
        Schmitt trigger that holds its state between the thresholds.
    """
    jz = np.asarray(jz, dtype=float)
    if not 0 <= hysteresis < 1:
        raise ValueError(f"hysteresis must be in [0, 1), got {hysteresis}")
    if hysteresis == 0.0:
        return (np.sign(jz) + 1.0) / 2.0
    return _trigger_state(jz, hysteresis * j).astype(float)


def _trigger_state(jz: np.ndarray, thr: float) -> np.ndarray:
    """Schmitt trigger states (0/1) with switching thresholds +-thr."""
    event = np.full(jz.shape, -1, dtype=np.int8)
    event[jz > thr] = 1
    event[jz < -thr] = 0
    if event[0] < 0:
        event[0] = 1 if jz[0] >= 0 else 0
    # forward-fill: state persists while jz stays between the thresholds
    idx = np.arange(jz.size)
    idx[event < 0] = 0
    idx = np.maximum.accumulate(idx)
    return event[idx]


def extract_periods(t: np.ndarray, jz: np.ndarray, j: float,
                    hysteresis: float = 0.25, discard_transient: int = 2
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Tick periods from falling edges of the clock signal.

    Edge times interpolate the crossing of the lower threshold -h*j
    between the bracketing samples (the zero crossing for h = 0).  The
    first ``discard_transient`` periods are dropped so the statistics
    are insensitive to the initial approach to the cycle.

    Returns
    -------
    periods, edges : ndarray
        Periods between consecutive retained falling edges and the
        retained edge times themselves (len(periods) + 1, empty when
        fewer than discard_transient + 2 edges exist, with a warning).
    """
    t = np.asarray(t, dtype=float)
    jz = np.asarray(jz, dtype=float)
    if t.shape != jz.shape or t.ndim != 1:
        raise ValueError("t and jz must be 1-D arrays of equal length")
    if discard_transient < 0:
        raise ValueError("discard_transient must be >= 0")
    thr = -hysteresis * j
    state = _trigger_state(jz, hysteresis * j)
    falling = np.flatnonzero((state[:-1] == 1) & (state[1:] == 0)) + 1
    # jz[k-1] >= thr > jz[k] at a falling sample, so the interpolation
    # denominator is strictly negative
    tk, tk1 = t[falling], t[falling - 1]
    yk, yk1 = jz[falling], jz[falling - 1]
    edges = tk1 + (thr - yk1) / (yk - yk1) * (tk - tk1)
    if edges.size < discard_transient + 2:
        warnings.warn(
            f"only {edges.size} falling edges found; need at least "
            f"{discard_transient + 2} for one retained period", stacklevel=2)
        return np.empty(0), np.empty(0)
    edges = edges[discard_transient:]
    return np.diff(edges), edges


@dataclass(frozen=True)
class ClockStatistics:
    """Summary statistics of a sample of tick periods."""

    mean_t: float
    var_t: float
    n_prec: float
    se_mean: float
    se_var: float
    se_nprec: float
    n_samples: int


def period_statistics(periods: np.ndarray, n_boot: int = 1000,
                      seed: int = 0) -> ClockStatistics:
    """Mean, variance and clock precision of a period sample.

    The precision N_prec = E[T]^2 / Var[T] counts the ticks until the
    accumulated phase uncertainty reaches one period.  Standard errors
    come from a seeded nonparametric bootstrap (``n_boot`` resamples);
    a zero-variance sample yields n_prec = inf and NaN errors.
    """
    periods = np.asarray(periods, dtype=float)
    if periods.ndim != 1 or periods.size < 2:
        raise ValueError(f"need at least two periods, got {periods.size}")
    n = periods.size
    mean_t = float(periods.mean())
    var_t = float(periods.var(ddof=1))
    if var_t == 0.0:
        return ClockStatistics(mean_t, 0.0, float("inf"),
                               float("nan"), float("nan"), float("nan"), n)
    n_prec = mean_t ** 2 / var_t

    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_boot, n))
    draws = periods[idx]
    b_mean = draws.mean(axis=1)
    b_var = draws.var(axis=1, ddof=1)
    with np.errstate(divide="ignore"):
        b_nprec = b_mean ** 2 / b_var
    finite = np.isfinite(b_nprec)
    return ClockStatistics(
        mean_t=mean_t, var_t=var_t, n_prec=float(n_prec),
        se_mean=float(b_mean.std(ddof=1)),
        se_var=float(b_var.std(ddof=1)),
        se_nprec=float(b_nprec[finite].std(ddof=1)),
        n_samples=n)


def ensemble_periods(t: np.ndarray, jz_matrix: np.ndarray, j: float,
                     hysteresis: float = 0.25, discard_transient: int = 2
                     ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-trajectory (periods, edges) in trajectory order.

    Convenience wrapper over :func:`extract_periods` for a stacked
    ensemble; trajectories with too few edges contribute empty arrays.
    """
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for row in np.asarray(jz_matrix):
            out.append(extract_periods(t, row, j, hysteresis, discard_transient))
    return out
