"""Homodyne-conditioned trajectories of the collective emitter.

The emitted field is mixed with a local oscillator of phase phi and the
conditioned state follows the diffusive stochastic master equation (Ito)

    drho_c = L rho_c dt + sqrt(gamma) dW H[J- e^{i phi}] rho_c,
    H[A] rho = A rho + rho A^dag - Tr[(A + A^dag) rho] rho,

with the photocurrent J dt = gamma <J- e^{i phi} + J+ e^{-i phi}>_c dt
+ sqrt(gamma) dW.  Because the record keeps the conditional state pure,
the default engine propagates a normalized state vector (one zgemm-pair
per Euler-Maruyama step, batched over trajectories); a density-matrix
engine integrating the master equation form directly is retained as a
cross-check oracle.  Both engines consume identical Wiener increments,
drawn from a counter-based substream keyed by (master_seed,
trajectory_index), so ensemble output is reproducible and independent
of how trajectories are grouped into batches or worker threads.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams
from .operators import CollectiveOps, collective_ops, ground_state

# trajectories are integrated in fixed-size batches; the decomposition
# depends only on n_traj, never on the worker count, so reductions in
# trajectory order give byte-identical results for any --threads value
DEFAULT_BATCH = 64

_ENGINES = ("pure", "density")


@dataclass(frozen=True, eq=False)
class SmeConfig:
    """Integration settings for conditioned trajectories.

    Parameters
    ----------
    params : ModelParams
        Physical parameters (including the homodyne phase phi).
    dt : float
        Euler-Maruyama step.  Warns when coarser than 1/200 of the
        semiclassical cycle above threshold.
    t_final : float
        Integration horizon; the actual endpoint is round(t_final/dt)
        whole steps.
    record_stride : int
        Moments are recorded every ``record_stride`` steps (row 0 holds
        the initial state).
    engine : str
        "pure" for the state-vector unravelling (default), "density"
        for the density-matrix oracle.
    initial_state : ndarray, optional
        Normalized ket of dimension N+1; defaults to |j, -j>.
    """

    params: ModelParams
    dt: float
    t_final: float
    record_stride: int = 1
    engine: str = "pure"
    initial_state: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_final < self.dt:
            raise ValueError("t_final must cover at least one step")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, got {self.record_stride}")
        if self.engine not in _ENGINES:
            raise ValueError(f"engine must be one of {_ENGINES}, got {self.engine!r}")
        if self.initial_state is not None:
            psi = np.asarray(self.initial_state)
            if psi.shape != (self.params.n_atoms + 1,):
                raise ValueError(
                    f"initial_state dimension {psi.shape} does not match N={self.params.n_atoms}")
            if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
                raise ValueError("initial_state must be normalized")
        omega0 = self.params.omega0
        if self.params.omega > omega0:
            cycle = 2 * np.pi / np.sqrt(self.params.omega ** 2 - omega0 ** 2)
            if self.dt > cycle / 200:
                warnings.warn(
                    f"dt = {self.dt} resolves the semiclassical cycle {cycle:.3g} "
                    f"with fewer than 200 steps; expect discretization bias",
                    stacklevel=2)

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))

    @property
    def n_records(self) -> int:
        return self.n_steps // int(self.record_stride) + 1

    @property
    def record_times(self) -> np.ndarray:
        return np.arange(self.n_records) * (self.record_stride * self.dt)


@dataclass
class TrajectoryRecord:
    """Decimated record of one conditioned trajectory.

    Rows are the record times; ``current`` and ``dw`` at row k belong to
    the integration step that *ends* at t[k] (row 0 carries the
    noise-free quadrature mean and dw = 0).
    """

    t: np.ndarray
    jx_c: np.ndarray
    jy_c: np.ndarray
    jz_c: np.ndarray
    jpjm_c: np.ndarray
    casimir_c: np.ndarray
    current: np.ndarray
    purity: np.ndarray
    dw: np.ndarray
    master_seed: int
    traj_index: int
    config: SmeConfig = field(repr=False)


@dataclass
class EnsembleResult:
    """Stacked records of ``n_traj`` trajectories (axis 0 = trajectory)."""

    t: np.ndarray
    jx_c: np.ndarray
    jy_c: np.ndarray
    jz_c: np.ndarray
    jpjm_c: np.ndarray
    casimir_c: np.ndarray
    current: np.ndarray
    purity: np.ndarray
    dw: np.ndarray
    master_seed: int
    n_traj: int
    config: SmeConfig = field(repr=False)

    _FIELDS = ("jx_c", "jy_c", "jz_c", "jpjm_c", "casimir_c", "current", "purity", "dw")

    def trajectory(self, i: int) -> TrajectoryRecord:
        return TrajectoryRecord(
            t=self.t, master_seed=self.master_seed, traj_index=i, config=self.config,
            **{name: getattr(self, name)[i] for name in self._FIELDS})

    def mean(self, name: str) -> np.ndarray:
        return getattr(self, name).mean(axis=0)

    def sem(self, name: str) -> np.ndarray:
        """Standard error of the ensemble mean at each record time."""
        arr = getattr(self, name)
        return arr.std(axis=0, ddof=1) / np.sqrt(arr.shape[0])


def trajectory_rng(master_seed: int, traj_index: int) -> np.random.Generator:
    """Counter-based generator for one trajectory's Wiener increments.

    Keyed by (master_seed, trajectory index) through SeedSequence spawn
    keys, so any subset of trajectories can be regenerated in isolation
    and results never depend on worker scheduling.
    """
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(traj_index,))
    return np.random.Generator(np.random.Philox(ss))


class _Workspace:
    """Precomputed matrices shared by both engines for one config."""

    def __init__(self, config: SmeConfig):
        p = config.params
        ops = collective_ops(p.n_atoms)
        self.ops = ops
        self.sqrt_gamma = np.sqrt(p.gamma)
        self.c_op = self.sqrt_gamma * np.exp(1j * p.phi) * ops.jm
        # drift A = -i Omega Jx - (gamma/2) J+J- shared by both engines
        self.a_op = -1j * p.omega * ops.jx - 0.5 * p.gamma * ops.jpjm
        self.c_t = np.ascontiguousarray(self.c_op.T)
        self.a_t = np.ascontiguousarray(self.a_op.T)
        self.jm_t = np.ascontiguousarray(ops.jm.T)
        self.casimir = ops.jx @ ops.jx + ops.jy @ ops.jy + ops.jz @ ops.jz
        self.casimir_t = np.ascontiguousarray(self.casimir.T)
        self.m_diag = ops.m_values.astype(float)
        self.psi0 = (np.asarray(config.initial_state, dtype=np.complex128)
                     if config.initial_state is not None else ground_state(p.n_atoms))


def _moments_pure(psi: np.ndarray, ws: _Workspace) -> dict:
    prob = np.abs(psi) ** 2
    jz = prob @ ws.m_diag
    jz2 = prob @ (ws.m_diag ** 2)
    jm_exp = np.einsum("bi,bi->b", psi.conj(), psi @ ws.jm_t)
    j = ws.ops.j
    norm2 = prob.sum(axis=1)
    return {
        "jx_c": jm_exp.real,
        "jy_c": -jm_exp.imag,
        "jz_c": jz,
        "jpjm_c": j * (j + 1) - jz2 + jz,
        "casimir_c": np.einsum("bi,bi->b", psi.conj(), psi @ ws.casimir_t).real,
        "purity": norm2 ** 2,
    }


def _moments_density(rho: np.ndarray, ws: _Workspace) -> dict:
    ops = ws.ops
    diag = np.einsum("bii->bi", rho).real
    jz = diag @ ws.m_diag
    jz2 = diag @ (ws.m_diag ** 2)
    jm_exp = np.einsum("ij,bji->b", ops.jm, rho)
    j = ops.j
    return {
        "jx_c": jm_exp.real,
        "jy_c": -jm_exp.imag,
        "jz_c": jz,
        "jpjm_c": j * (j + 1) - jz2 + jz,
        "casimir_c": np.einsum("ij,bji->b", ws.casimir, rho).real,
        "purity": np.einsum("bij,bji->b", rho, rho).real,
    }


def _run_batch(config: SmeConfig, master_seed: int, rng_indices: np.ndarray,
               out: dict, out_start: int = None,
               noise: np.ndarray | None = None) -> None:
    """Integrate one contiguous batch of trajectories.

    Noise substreams are keyed by ``rng_indices``; results land in rows
    [out_start, out_start + batch) of every array in ``out``.  ``noise``,
    when given, must have shape (n_steps, len(rng_indices)) and replaces
    the generated increments (used by convergence studies).
    """
    ws = _Workspace(config)
    p = config.params
    dt, stride, n_steps = config.dt, int(config.record_stride), config.n_steps
    if out_start is None:
        out_start = int(rng_indices[0])
    # BLAS routes single-row products through a different kernel with
    # different rounding, so a width-1 batch would not reproduce the
    # same trajectory bit for bit; pad with a discarded dummy row
    n_real = len(rng_indices)
    if n_real == 1:
        rng_indices = np.repeat(rng_indices, 2)
        if noise is not None:
            noise = np.repeat(noise, 2, axis=1)
    nb = len(rng_indices)
    batch = slice(out_start, out_start + n_real)
    sqrt_dt = np.sqrt(dt)
    pure = config.engine == "pure"

    moments = _moments_pure if pure else _moments_density

    def write_row(row: int, values: dict) -> None:
        for name, v in values.items():
            out[name][batch, row] = v[:n_real]

    if pure:
        state = np.tile(ws.psi0, (nb, 1))
        m0 = np.einsum("bi,bi->b", state.conj(), state @ ws.c_t)
    else:
        rho0 = np.outer(ws.psi0, ws.psi0.conj())
        state = np.tile(rho0, (nb, 1, 1))
        m0 = np.einsum("ij,bji->b", ws.c_op, state)
    row0 = moments(state, ws)
    # row 0 current: quadrature mean of the initial state, no noise yet
    row0["current"] = ws.sqrt_gamma * 2.0 * m0.real
    row0["dw"] = np.zeros(nb)
    write_row(0, row0)

    rngs = None if noise is not None else [
        trajectory_rng(master_seed, int(i)) for i in rng_indices]
    chunk_len = 4096
    dw_chunk = np.empty((0, nb))
    chunk_pos = chunk_start = 0

    for s in range(n_steps):
        if noise is None:
            if chunk_pos >= dw_chunk.shape[0]:
                chunk_start = s
                n_draw = min(chunk_len, n_steps - s)
                dw_chunk = np.empty((n_draw, nb))
                for b, rng in enumerate(rngs):
                    dw_chunk[:, b] = rng.normal(0.0, sqrt_dt, n_draw)
                chunk_pos = 0
            dw = dw_chunk[chunk_pos]
            chunk_pos += 1
        else:
            dw = noise[s]

        if pure:
            c_psi = state @ ws.c_t
            a_psi = state @ ws.a_t
            m = np.einsum("bi,bi->b", state.conj(), c_psi)
            x2 = 2.0 * m.real
            # psi' = (1 - dt x2^2/8 - dW x2/2) psi + dt A psi
            #        + (dt x2/2 + dW) C psi, then renormalize
            state *= (1.0 - 0.125 * dt * x2 ** 2 - 0.5 * dw * x2)[:, None]
            state += dt * a_psi
            state += (0.5 * dt * x2 + dw)[:, None] * c_psi
            state /= np.linalg.norm(state, axis=1)[:, None]
        else:
            ops = ws.ops
            comm = ws.a_op @ state
            lrho = comm + np.conj(np.swapaxes(comm, 1, 2))
            lrho += p.gamma * (ops.jm @ state @ ops.jp)
            c_rho = ws.c_op @ state
            h_rho = c_rho + np.conj(np.swapaxes(c_rho, 1, 2))
            x2 = np.einsum("bii->b", h_rho).real
            h_rho -= x2[:, None, None] * state
            state += dt * lrho + dw[:, None, None] * h_rho
            state += np.conj(np.swapaxes(state, 1, 2))
            state *= 0.5
            state /= np.einsum("bii->b", state).real[:, None, None]

        if (s + 1) % stride == 0:
            vals = moments(state, ws)
            vals["current"] = ws.sqrt_gamma * (x2 + dw / dt)
            vals["dw"] = dw
            write_row((s + 1) // stride, vals)


def simulate_ensemble(config: SmeConfig, n_traj: int, master_seed: int,
                      workers: int = 1, batch_size: int = DEFAULT_BATCH) -> EnsembleResult:
    """Integrate ``n_traj`` conditioned trajectories.

    Results are a pure function of (config, n_traj, master_seed): each
    trajectory owns an independent noise substream and batches are cut
    at fixed ``batch_size`` boundaries, so ``workers`` affects wall time
    only.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    n_rec = config.n_records
    out = {name: np.empty((n_traj, n_rec)) for name in EnsembleResult._FIELDS}
    batches = [np.arange(lo, min(lo + batch_size, n_traj))
               for lo in range(0, n_traj, batch_size)]

    if workers <= 1 or len(batches) == 1:
        for idx in batches:
            _run_batch(config, master_seed, idx, out)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda idx: _run_batch(config, master_seed, idx, out), batches))

    return EnsembleResult(t=config.record_times, master_seed=master_seed,
                          n_traj=n_traj, config=config, **out)


def simulate_trajectory(config: SmeConfig, master_seed: int,
                        traj_index: int = 0) -> TrajectoryRecord:
    """Integrate a single conditioned trajectory (substream ``traj_index``)."""
    n_rec = config.n_records
    out = {name: np.empty((1, n_rec)) for name in EnsembleResult._FIELDS}
    _run_batch(config, master_seed, np.array([traj_index]), out, out_start=0)
    return TrajectoryRecord(
        t=config.record_times, master_seed=master_seed, traj_index=traj_index,
        config=config, **{name: out[name][0] for name in EnsembleResult._FIELDS})


def simulate_with_noise(config: SmeConfig, dw: np.ndarray) -> TrajectoryRecord:
    """Integrate one trajectory with explicitly supplied increments.

    ``dw`` must have shape (n_steps,); used for pathwise convergence
    studies where coarse increments are sums of fine ones.
    """
    dw = np.asarray(dw, dtype=float)
    if dw.shape != (config.n_steps,):
        raise ValueError(f"dw must have shape ({config.n_steps},), got {dw.shape}")
    n_rec = config.n_records
    out = {name: np.empty((1, n_rec)) for name in EnsembleResult._FIELDS}
    _run_batch(config, 0, np.array([0]), out, out_start=0, noise=dw[:, None])
    return TrajectoryRecord(
        t=config.record_times, master_seed=-1, traj_index=0, config=config,
        **{name: out[name][0] for name in EnsembleResult._FIELDS})
