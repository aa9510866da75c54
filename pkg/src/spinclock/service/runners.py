"""Command implementations behind the run service.

Each ``run_*`` function consumes a validated request, produces the data
files for that command in ``output_dir``, and returns a RunResult with
checksums and a small numeric summary.  A manifest is written in
``running`` state before any computation and finalized afterwards; it
carries wall time, so the manifest itself is the one file that is not
byte-reproducible between runs.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Callable

import numpy as np

from .. import __version__
from ..clock import ensemble_periods, period_statistics
from ..kur import analytic_nq, coherence_correction, dynamical_activity, kur_report
from ..model import ModelParams
from ..operators import collective_ops, expectation
from ..output import checksum_files, csv_to_json, write_csv, write_json
from ..semiclassical import integrate_bloch, limit_cycle_frequency
from ..liouvillian import steady_state_exact
from ..thermo import cycle_dissipation, dissipation_fit, energy_ledger
from ..trajectories import SmeConfig, simulate_ensemble, simulate_trajectory
from .models import (
    ClockSpec,
    EnsembleRequest,
    KurRequest,
    PrecisionSweepRequest,
    RunResult,
    SemiclassicalRequest,
    SimSpec,
    SteadyStateRequest,
    ThermoRequest,
    TrajectoryRequest,
)

BOOT_SAMPLES = 1000


def _point_seed(master_seed: int, index: int) -> int:
    """Derive an independent 64-bit seed for grid point ``index``.

    Grid points get disjoint entropy so that per-trajectory substreams
    never repeat across points, while staying reproducible from the
    single master seed.
    """
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _sme_config(model_params: ModelParams, sim: SimSpec) -> SmeConfig:
    return SmeConfig(
        params=model_params,
        dt=sim.dt,
        t_final=sim.t_final,
        record_stride=sim.record_stride,
        engine=sim.engine,
    )


def _pooled_periods(result, j: float, clock: ClockSpec) -> tuple[np.ndarray, list]:
    """Concatenate periods over trajectories in index order."""
    per_traj = ensemble_periods(
        result.t, result.jz_c, j,
        hysteresis=clock.hysteresis,
        discard_transient=clock.discard_transient,
    )
    pooled = [p for p, _ in per_traj if p.size]
    periods = np.concatenate(pooled) if pooled else np.array([])
    return periods, per_traj


def run_steady_state(req: SteadyStateRequest, output_dir: Path) -> tuple[list[Path], dict]:
    ops = collective_ops(req.n_atoms)
    omega0 = req.gamma * req.n_atoms / 2.0
    jz_over_n = []
    for beta in req.beta_grid:
        params = ModelParams(n_atoms=req.n_atoms, omega=beta * omega0, gamma=req.gamma)
        rho = steady_state_exact(ops, params)
        jz_over_n.append(float(np.real(expectation(ops.jz, rho))) / req.n_atoms)
    path = write_csv(output_dir / "steady_state.csv", [
        ("beta", req.beta_grid),
        ("N", [req.n_atoms] * len(req.beta_grid)),
        ("jz_over_N", jz_over_n),
    ])
    summary = {
        "n_points": len(req.beta_grid),
        "jz_over_N_min": min(jz_over_n),
        "jz_over_N_max": max(jz_over_n),
    }
    return [path], summary


def run_semiclassical(req: SemiclassicalRequest, output_dir: Path) -> tuple[list[Path], dict]:
    p = req.model.to_params()
    n_steps = int(round(req.t_final / req.dt))
    t_grid = np.linspace(0.0, n_steps * req.dt, n_steps + 1)
    x0 = np.asarray(req.x0, dtype=float) if req.x0 is not None else None
    traj = integrate_bloch(p.omega, p.gamma, p.n_atoms, t_grid,
                           x0=x0, include_correction=req.include_correction)
    path = write_csv(output_dir / "semiclassical.csv", [
        ("t", traj.t), ("x", traj.x), ("y", traj.y), ("z", traj.z),
        ("theta", traj.theta),
    ])
    above = p.omega > p.omega0
    summary = {
        "omega0": p.omega0,
        "above_threshold": above,
        "sphere_error": traj.sphere_error,
    }
    if above:
        summary["cycle_period"] = 2 * np.pi / limit_cycle_frequency(p.omega, p.omega0)
    return [path], summary


def run_trajectory(req: TrajectoryRequest, output_dir: Path) -> tuple[list[Path], dict]:
    p = req.model.to_params()
    config = _sme_config(p, req.sim)
    rec = simulate_trajectory(config, req.master_seed, traj_index=req.traj_index)
    columns = [
        ("t", rec.t), ("jx_c", rec.jx_c), ("jy_c", rec.jy_c), ("jz_c", rec.jz_c),
        ("current", rec.current), ("purity", rec.purity),
    ]
    if req.overlay_semiclassical:
        # Mean-field orbit from the same initial state, normalized to spin 1/2
        # so columns are directly comparable with jx_c/N etc.
        sc = integrate_bloch(p.omega, p.gamma, p.n_atoms, rec.t,
                             x0=np.array([0.0, 0.0, -0.5]))
        columns += [("sc_x", sc.x), ("sc_y", sc.y), ("sc_z", sc.z)]
    path = write_csv(output_dir / "trajectory.csv", columns)
    summary = {
        "n_records": rec.t.size,
        "final_jz": float(rec.jz_c[-1]),
        "min_purity": float(rec.purity.min()),
    }
    return [path], summary


def run_ensemble(req: EnsembleRequest, output_dir: Path) -> tuple[list[Path], dict]:
    p = req.model.to_params()
    config = _sme_config(p, req.sim)
    result = simulate_ensemble(config, req.n_traj, req.master_seed, workers=req.workers)

    curves = {"t": result.t}
    for name in ("jx_c", "jy_c", "jz_c", "jpjm_c", "purity"):
        curves[name] = result.mean(name)
        curves["sem_" + name] = result.sem(name)
    files = [write_json(output_dir / "ensemble.json", {
        "params": {"n_atoms": p.n_atoms, "omega": p.omega, "gamma": p.gamma,
                   "phi": p.phi, "omega_a": p.omega_a},
        "n_traj": req.n_traj,
        "master_seed": req.master_seed,
        "engine": req.sim.engine,
        "moment_curves": curves,
    })]

    periods, per_traj = _pooled_periods(result, p.j, req.clock)
    traj_idx, period_idx, values = [], [], []
    for i, (pers, _) in enumerate(per_traj):
        traj_idx.extend([i] * pers.size)
        period_idx.extend(range(pers.size))
        values.extend(pers.tolist())
    files.append(write_csv(output_dir / "periods.csv", [
        ("trajectory_index", traj_idx),
        ("period_index", period_idx),
        ("T", values),
    ]))

    stats_payload: dict = {"n_samples": int(periods.size)}
    if periods.size >= 2:
        stats = period_statistics(periods, n_boot=BOOT_SAMPLES, seed=req.master_seed)
        stats_payload = {
            "mean_T": stats.mean_t, "var_T": stats.var_t, "n_prec": stats.n_prec,
            "se_mean": stats.se_mean, "se_var": stats.se_var, "se_nprec": stats.se_nprec,
            "n_samples": stats.n_samples,
        }
    stats_payload["config"] = {
        "model": req.model.model_dump(), "sim": req.sim.model_dump(),
        "clock": req.clock.model_dump(), "n_traj": req.n_traj,
        "master_seed": req.master_seed,
    }
    files.append(write_json(output_dir / "clock_stats.json", stats_payload))

    summary = {
        "n_traj": req.n_traj,
        "n_periods": int(periods.size),
        "final_mean_jz": float(result.mean("jz_c")[-1]),
    }
    if "mean_T" in stats_payload:
        summary["mean_T"] = stats_payload["mean_T"]
        summary["n_prec"] = stats_payload["n_prec"]
    return files, summary


def run_precision_sweep(req: PrecisionSweepRequest, output_dir: Path) -> tuple[list[Path], dict]:
    rows_ratio, rows_n, rows_nprec, rows_se = [], [], [], []
    empty_points = []
    point = 0
    for n in req.n_list:
        for ratio in req.ratio_grid:
            # omega fixed across the sweep; gamma sets omega0 = ratio * omega.
            gamma = 2.0 * ratio * req.omega / n
            p = ModelParams(n_atoms=n, omega=req.omega, gamma=gamma)
            config = _sme_config(p, req.sim)
            seed = _point_seed(req.master_seed, point)
            result = simulate_ensemble(config, req.n_traj, seed, workers=req.workers)
            periods, _ = _pooled_periods(result, p.j, req.clock)
            if periods.size >= 2:
                stats = period_statistics(periods, n_boot=BOOT_SAMPLES, seed=seed)
                nprec, se = stats.n_prec, stats.se_nprec
            else:
                empty_points.append({"N": n, "omega0_over_omega": ratio})
                nprec, se = float("nan"), float("nan")
            rows_ratio.append(ratio)
            rows_n.append(n)
            rows_nprec.append(nprec)
            rows_se.append(se)
            point += 1
    path = write_csv(output_dir / "precision_sweep.csv", [
        ("omega0_over_omega", rows_ratio),
        ("N", rows_n),
        ("n_prec", rows_nprec),
        ("se", rows_se),
    ])
    summary = {
        "n_points": point,
        "empty_points": empty_points,
        "n_prec_max": float(np.nanmax(rows_nprec)) if rows_nprec else float("nan"),
    }
    return [path], summary


def run_kur(req: KurRequest, output_dir: Path) -> tuple[list[Path], dict]:
    cols: dict[str, list] = {name: [] for name in (
        "N", "gamma", "omega", "omega0_over_omega", "activity", "coherence",
        "mean_T", "var_T", "n_prec", "classical_ratio", "quantum_ratio",
        "se_quantum_ratio", "analytic_activity", "analytic_coherence")}
    violations = 0
    for point, omega in enumerate(req.omega_grid):
        p = ModelParams(n_atoms=req.n_atoms, omega=omega, gamma=req.gamma)
        activity = dynamical_activity(p)
        coherence = coherence_correction(p)
        if req.n_atoms in (2, 3):
            ana_n, ana_q = analytic_nq(req.n_atoms, omega, req.gamma)
        else:
            ana_n, ana_q = float("nan"), float("nan")

        config = _sme_config(p, req.sim)
        seed = _point_seed(req.master_seed, point)
        result = simulate_ensemble(config, req.n_traj, seed, workers=req.workers)
        periods, _ = _pooled_periods(result, p.j, req.clock)
        if periods.size >= 2:
            stats = period_statistics(periods, n_boot=BOOT_SAMPLES, seed=seed)
            report = kur_report(periods, activity, coherence, seed=seed)
            row = (stats.mean_t, stats.var_t, stats.n_prec,
                   report.classical_ratio, report.quantum_ratio, report.se_quantum_ratio)
            violations += int(report.violates_quantum)
        else:
            row = (float("nan"),) * 6
        for name, value in zip(
                ("N", "gamma", "omega", "omega0_over_omega", "activity", "coherence",
                 "mean_T", "var_T", "n_prec", "classical_ratio", "quantum_ratio",
                 "se_quantum_ratio", "analytic_activity", "analytic_coherence"),
                (req.n_atoms, req.gamma, omega, p.omega0 / omega, activity, coherence,
                 *row, ana_n, ana_q)):
            cols[name].append(value)
    path = write_csv(output_dir / "kur_sweep.csv", list(cols.items()))
    summary = {
        "n_points": len(req.omega_grid),
        "quantum_violations": violations,
        "max_quantum_ratio": float(np.nanmax(cols["quantum_ratio"])),
        "max_classical_ratio": float(np.nanmax(cols["classical_ratio"])),
    }
    return [path], summary


def run_thermo(req: ThermoRequest, output_dir: Path) -> tuple[list[Path], dict]:
    p = req.model.to_params()
    config = _sme_config(p, req.sim)
    result = simulate_ensemble(config, req.n_traj, req.master_seed, workers=req.workers)

    traj_idx, cyc_idx, cyc_t, cyc_de = [], [], [], []
    per_traj = ensemble_periods(result.t, result.jz_c, p.j,
                                hysteresis=req.clock.hysteresis,
                                discard_transient=req.clock.discard_transient)
    for i, (periods, edges) in enumerate(per_traj):
        if periods.size == 0:
            continue
        ledger = energy_ledger(result.trajectory(i), p)
        delta_e = cycle_dissipation(ledger, edges)
        traj_idx.extend([i] * periods.size)
        cyc_idx.extend(range(periods.size))
        cyc_t.extend(periods.tolist())
        cyc_de.extend(delta_e.tolist())

    files = [write_csv(output_dir / "cycles.csv", [
        ("trajectory_index", traj_idx),
        ("cycle_index", cyc_idx),
        ("T", cyc_t),
        ("delta_E", cyc_de),
    ])]

    ledger0 = energy_ledger(result.trajectory(0), p)
    files.append(write_csv(output_dir / "energy.csv", [
        ("t", ledger0.t), ("p_in", ledger0.p_in),
        ("p_out", ledger0.p_out), ("e_dis", ledger0.e_dis),
    ]))

    summary: dict = {"n_cycles": len(cyc_t)}
    if len(cyc_t) >= 3:
        fit = dissipation_fit(np.asarray(cyc_t), np.asarray(cyc_de))
        files.append(write_json(output_dir / "fit.json", {
            "slope": fit.slope, "intercept": fit.intercept,
            "pearson_r": fit.pearson_r, "n_cycles": fit.n_cycles,
        }))
        summary.update({
            "slope": fit.slope,
            "pearson_r": fit.pearson_r,
            "reference_slope": p.omega_a * p.gamma * p.n_atoms**2 / 4.0,
        })
    return files, summary


RUNNERS: dict[str, Callable] = {
    "steady-state": run_steady_state,
    "semiclassical": run_semiclassical,
    "trajectory": run_trajectory,
    "ensemble": run_ensemble,
    "precision-sweep": run_precision_sweep,
    "kur": run_kur,
    "thermo": run_thermo,
}


def execute(command: str, request, output_dir: str | Path,
            table_format: str = "csv") -> RunResult:
    """Run one command end to end: manifest, data files, checksums."""
    if command not in RUNNERS:
        raise ValueError(f"unknown command {command!r}")
    if table_format not in ("csv", "json"):
        raise ValueError(f"unknown table format {table_format!r}")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    config = request.model_dump(mode="json")
    manifest_path = output_dir / "manifest.json"
    write_json(manifest_path, {
        "command": command, "config": config,
        "version": __version__, "status": "running",
    })
    t0 = time.perf_counter()
    files, summary = RUNNERS[command](request, output_dir)
    if table_format == "json":
        files = [csv_to_json(f) if f.suffix == ".csv" else f for f in files]
    wall = time.perf_counter() - t0
    checksums = checksum_files(files)
    write_json(manifest_path, {
        "command": command, "config": config, "version": __version__,
        "status": "complete", "wall_time_s": wall, "files": checksums,
    })
    return RunResult(
        command=command,
        version=__version__,
        wall_time_s=wall,
        output_dir=str(output_dir),
        files=checksums,
        summary=summary,
        config=config,
    )
