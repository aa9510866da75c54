"""End-to-end acceptance gate.

One test per numbered criterion; each prints a single
"criterion NN: PASS/FAIL" line (visible with -s or on failure) and the
pytest -v report gives the same one-line verdict per criterion.  The
statistical checks run at desk scale with fixed seeds, so every run is
reproducible bit for bit.
"""

import json

import numpy as np
import pytest
from scipy import stats as sstats

from make_goldens import DATA_DIR, GOLDEN_SEEDS, build_golden, golden_name
from spinclock.clock import ensemble_periods, period_statistics
from spinclock.cli import main as cli_main
from spinclock.kur import analytic_nq, coherence_correction, dynamical_activity, kur_report
from spinclock.liouvillian import (
    evolve,
    liouvillian,
    steady_state_exact,
    steady_state_numeric,
)
from spinclock.model import ModelParams
from spinclock.operators import (
    collective_ops,
    density_matrix,
    expectation,
    ground_state,
    trace_distance,
)
from spinclock.semiclassical import (
    bloch_rhs,
    integrate_bloch,
    limit_cycle_frequency,
    measured_cycle_period,
    stable_fixed_point,
    theta_solution,
)
from spinclock.thermo import cycle_dissipation, dissipation_fit, energy_ledger, power_balance_residual
from spinclock.trajectories import SmeConfig, simulate_ensemble, simulate_with_noise, trajectory_rng

MASTER = 20260815


def _line(num, ok, detail):
    print(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num:02d}: {detail}"


def _point_seed(index):
    ss = np.random.SeedSequence(entropy=MASTER, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _pooled_periods(ens, j, hysteresis=0.25):
    parts = [p for p, _ in ensemble_periods(ens.t, ens.jz_c, j, hysteresis=hysteresis)
             if p.size]
    return np.concatenate(parts) if parts else np.empty(0)


def test_criterion_01_collective_algebra():
    worst = 0.0
    for n in (1, 2, 3, 10, 20, 70):
        ops = collective_ops(n)
        j = ops.j
        eye = np.eye(ops.dim)
        scale = max(1.0, j**2)
        checks = [
            (ops.jx @ ops.jy - ops.jy @ ops.jx) - 1j * ops.jz,
            (ops.jy @ ops.jz - ops.jz @ ops.jy) - 1j * ops.jx,
            (ops.jz @ ops.jx - ops.jx @ ops.jz) - 1j * ops.jy,
            ops.jx @ ops.jx + ops.jy @ ops.jy + ops.jz @ ops.jz - j * (j + 1) * eye,
            ops.jp @ ops.jm - (j * (j + 1) * eye - ops.jz @ ops.jz + ops.jz),
        ]
        worst = max(worst, max(np.linalg.norm(c) / scale for c in checks))
    _line(1, worst < 1e-12, f"su(2)/Casimir/ladder identities, worst scaled residual {worst:.2e}")


def test_criterion_02_steady_state_cross_validation():
    ns = (2, 3, 5, 10, 20)
    betas = (0.2, 0.5, 1.0, 1.5, 3.0)
    gamma = 0.1
    worst_td = 0.0
    curves = {}
    for n in ns:
        ops = collective_ops(n)
        omega0 = gamma * n / 2
        row = []
        for beta in betas:
            p = ModelParams(n_atoms=n, omega=beta * omega0, gamma=gamma)
            exact = steady_state_exact(ops, p)
            numeric = steady_state_numeric(liouvillian(ops, p))
            worst_td = max(worst_td, trace_distance(exact, numeric))
            row.append(float(np.real(expectation(ops.jz, exact))) / n)
        curves[n] = row
    shape_ok = all(
        row[0] < -0.45 and row[-1] > -0.05 and np.all(np.diff(row) > 0)
        for row in curves.values()
    )
    # transition sharpens with N: the rise across the threshold steepens
    # and the curve above threshold sits closer to zero
    rises = [curves[n][3] - curves[n][1] for n in ns]
    above = [curves[n][3] for n in ns]
    sharper = np.all(np.diff(rises) > 0) and np.all(np.diff(above) > 0)
    ok = worst_td < 1e-8 and shape_ok and sharper
    _line(2, ok, f"worst trace distance {worst_td:.2e}; shape and sharpening hold")


def test_criterion_03_closed_form_kur_oracles():
    worst = 0.0
    for n_atoms in (2, 3):
        for gamma in (0.2, 1.0, 5.0):
            for omega in (0.1, 1.0, 10.0):
                p = ModelParams(n_atoms=n_atoms, omega=omega, gamma=gamma)
                act_ref, coh_ref = analytic_nq(n_atoms, omega, gamma)
                err_a = abs(dynamical_activity(p) - act_ref) / (abs(act_ref) + 1e-7)
                err_q = abs(coherence_correction(p) - coh_ref) / (abs(coh_ref) + 1e-7)
                worst = max(worst, err_a, err_q)
    spots = (
        abs(analytic_nq(2, 1.0, 1.0)[0] - 8 / 11),
        abs(analytic_nq(2, 1.0, 1.0)[1] - 128 / 55),
        abs(analytic_nq(3, 1.0, 1.0)[0] - 35 / 37),
        abs(analytic_nq(3, 1.0, 1.0)[1] - 14968 / 21793),
    )
    ok = worst < 1e-8 and max(spots) < 1e-10
    _line(3, ok, f"3x3 grid worst rel err {worst:.2e}, spot values to {max(spots):.1e}")


def test_criterion_04_semiclassical_suite():
    # (a) closed-form phase vs ODE at a = 0.5
    omega, omega0 = 2.0, 1.0
    w = limit_cycle_frequency(omega, omega0)
    t = np.linspace(0.0, 10 * 2 * np.pi / w, 8001)
    traj = integrate_bloch(omega, 2 * omega0 / 10, 10, t)
    err_theta = np.max(np.abs(traj.theta - theta_solution(t, omega, omega0)))

    # (b) measured period against 2*pi/sqrt(omega^2 - omega0^2)
    period_ok, worst_period = True, 0.0
    for ratio in (1.1, 2.0, 12.0):
        n, gamma = 10, 0.2
        w0 = gamma * n / 2
        measured = measured_cycle_period(ratio * w0, gamma, n)
        target = 2 * np.pi / limit_cycle_frequency(ratio * w0, w0)
        rel = abs(measured / target - 1)
        worst_period = max(worst_period, rel)
        period_ok &= rel < 1e-3

    # (c) below-threshold convergence to the stable fixed point
    fixed_ok = True
    for ratio in (0.5, 0.9):
        n, gamma = 6, 0.5
        w0 = gamma * n / 2
        fp = stable_fixed_point(ratio * w0, w0)
        tt = np.linspace(0.0, 400.0, 4001)
        tr = integrate_bloch(ratio * w0, gamma, n, tt)
        final = np.array([tr.x[-1], tr.y[-1], tr.z[-1]])
        fixed_ok &= np.linalg.norm(final - fp) < 1e-6
        fixed_ok &= np.linalg.norm(bloch_rhs(fp, ratio * w0, gamma, n)) < 1e-10

    # (d) sphere conservation
    sphere = integrate_bloch(2 * np.pi, 0.1, 10, np.linspace(0.0, 40.0, 4001)).sphere_error

    ok = err_theta < 1e-6 and period_ok and fixed_ok and sphere < 1e-8
    _line(4, ok, f"theta err {err_theta:.1e}, period err {worst_period:.1e}, sphere {sphere:.1e}")


def test_criterion_05_unravelling_consistency():
    p = ModelParams(n_atoms=2, omega=1.0, gamma=0.5)
    ops = collective_ops(2)

    config = SmeConfig(params=p, dt=2e-4, t_final=10.0, record_stride=2500)
    ens = simulate_ensemble(config, n_traj=2000, master_seed=MASTER, workers=4)
    states = evolve(liouvillian(ops, p), density_matrix(ground_state(2)), ens.t)
    jz_me = np.array([float(np.real(np.trace(ops.jz @ r))) for r in states])
    dev = np.abs(ens.mean("jz_c") - jz_me)[1:] / ens.sem("jz_c")[1:]
    mean_ok = dev.max() < 4.0

    # pathwise cross-engine error on a shared Brownian path, halving dt
    dts = (4e-3, 2e-3, 1e-3, 5e-4)
    n_fine = int(round(4.0 / dts[-1]))
    errs = []
    for dt in dts:
        k = int(round(dt / dts[-1]))
        per_path = []
        for path in range(6):
            rng = trajectory_rng(MASTER + path, 0)
            dw = rng.normal(0.0, np.sqrt(dts[-1]), n_fine).reshape(-1, k).sum(axis=1)
            rec_p = simulate_with_noise(SmeConfig(params=p, dt=dt, t_final=4.0, engine="pure"), dw)
            rec_d = simulate_with_noise(SmeConfig(params=p, dt=dt, t_final=4.0, engine="density"), dw)
            per_path.append(np.sqrt(np.mean((rec_p.jz_c - rec_d.jz_c) ** 2)))
        errs.append(float(np.mean(per_path)))
    order = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])

    ok = mean_ok and order >= 0.5
    _line(5, ok, f"max |mean - ME| = {dev.max():.2f} SE over 20 checkpoints; engine order {order:.2f}")


def test_criterion_06_sphere_confinement():
    p = ModelParams(n_atoms=10, omega=2 * np.pi, gamma=0.1)
    config = SmeConfig(params=p, dt=5e-4, t_final=20.0, record_stride=10)
    ens = simulate_ensemble(config, n_traj=4, master_seed=MASTER, workers=2)
    j = p.j
    casimir_err = np.max(np.abs(ens.casimir_c - j * (j + 1)))
    purity_err = np.max(np.abs(ens.purity - 1.0))
    ok = casimir_err < 1e-8 and purity_err < 1e-8
    _line(6, ok, f"max |casimir - j(j+1)| = {casimir_err:.1e}, max |purity - 1| = {purity_err:.1e}")


def test_criterion_07_clock_phenomenology(tmp_path):
    # mean extracted period on the oscillating-regime parameters; the
    # trigger half-width 0.2 avoids the skipped-cycle tail that a wider
    # hysteresis band introduces at this system size
    p = ModelParams(n_atoms=10, omega=2 * np.pi, gamma=0.1)
    config = SmeConfig(params=p, dt=5e-4, t_final=60.0, record_stride=10)
    ens = simulate_ensemble(config, n_traj=24, master_seed=101, workers=4)
    periods = _pooled_periods(ens, p.j, hysteresis=0.2)
    stats = period_statistics(periods, seed=0)
    target = 2 * np.pi / limit_cycle_frequency(p.omega, p.omega0)
    rel = abs(stats.mean_t / target - 1)
    diffusion_ok = stats.var_t > 0

    golden_ok = True
    for seed in GOLDEN_SEEDS:
        stored = (DATA_DIR / golden_name(seed)).read_bytes()
        golden_ok &= build_golden(seed, tmp_path).read_bytes() == stored

    ok = rel < 0.05 and diffusion_ok and golden_ok
    _line(7, ok, f"mean period off by {rel * 100:.2f}% ({stats.n_samples} periods), "
                 f"Var[T] = {stats.var_t:.3e}, goldens bit-identical: {golden_ok}")


@pytest.fixture(scope="module")
def precision_sweep():
    """Shared sweep for criteria 8 and 9: fixed drive, omega0 via gamma.

    Above omega0/omega ~ 0.6 the conditioned spin at these small N is
    pinned by measurement backaction and the trigger stops seeing full
    swings, so the grid ends there; the last point gets a larger
    trajectory budget because cycles are already scarce.
    """
    omega = 2 * np.pi
    ratios = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    rows = []
    index = 0
    for n in (1, 2, 3):
        for ratio in ratios:
            gamma = 2 * ratio * omega / n
            p = ModelParams(n_atoms=n, omega=omega, gamma=gamma)
            config = SmeConfig(params=p, dt=5e-4, t_final=120.0, record_stride=10)
            seed = _point_seed(index)
            n_traj = 25 if ratio <= 0.5 else 56
            ens = simulate_ensemble(config, n_traj=n_traj, master_seed=seed, workers=4)
            periods = _pooled_periods(ens, p.j)
            report = kur_report(periods, dynamical_activity(p),
                                coherence_correction(p), seed=seed)
            rows.append({"n": n, "ratio": ratio, "n_periods": periods.size,
                         "n_prec": report.stats.n_prec, "report": report})
            index += 1
    return rows


def test_criterion_08_precision_trend(precision_sweep):
    details = []
    ok = True
    for n in (1, 2, 3):
        rows = [r for r in precision_sweep if r["n"] == n]
        assert all(r["n_periods"] >= 1000 for r in rows), \
            f"N={n}: fewer than 1000 periods at some grid point"
        ratios = [r["ratio"] for r in rows]
        nprec = [r["n_prec"] for r in rows]
        rho, pval = sstats.spearmanr(ratios, nprec, alternative="less")
        details.append(f"N={n}: rho={rho:.2f} p={pval:.4f}")
        ok &= (rho < 0) and (pval < 0.05)
    _line(8, ok, "; ".join(details))


def test_criterion_09_kur_bounds(precision_sweep):
    quantum_ok = all(
        r["report"].quantum_ratio <= 1 + 3 * r["report"].se_quantum_ratio
        for r in precision_sweep
    )
    max_q = max(r["report"].quantum_ratio for r in precision_sweep)
    small = [r for r in precision_sweep if r["ratio"] <= 0.3]
    classical_violation = max(r["report"].classical_ratio for r in small)
    ok = quantum_ok and classical_violation > 1.0
    _line(9, ok, f"max quantum ratio {max_q:.3f} (bound respected everywhere); "
                 f"classical ratio up to {classical_violation:.2f} at small omega0/omega")


def test_criterion_10_thermodynamics():
    p = ModelParams(n_atoms=20, omega=2 * np.pi, gamma=0.1)
    config = SmeConfig(params=p, dt=5e-4, t_final=40.0, record_stride=10)
    ens = simulate_ensemble(config, n_traj=32, master_seed=MASTER + 5, workers=4)
    all_t, all_de = [], []
    per_traj = ensemble_periods(ens.t, ens.jz_c, p.j)
    for i, (periods, edges) in enumerate(per_traj):
        if periods.size == 0:
            continue
        ledger = energy_ledger(ens.trajectory(i), p)
        all_t.append(periods)
        all_de.append(cycle_dissipation(ledger, edges))
    periods = np.concatenate(all_t)
    delta_e = np.concatenate(all_de)
    fit = dissipation_fit(periods, delta_e)
    reference = p.gamma * p.n_atoms**2 / 4
    slope_ok = abs(fit.slope / reference - 1) < 0.25

    ops = collective_ops(20)
    states = evolve(liouvillian(ops, p), density_matrix(ground_state(20)),
                    np.array([0.0, 0.5, 1.0, 2.0]))
    residual = max(power_balance_residual(ops, p, rho) for rho in states)

    ok = fit.n_cycles >= 500 and fit.pearson_r >= 0.9 and slope_ok and residual < 1e-8
    _line(10, ok, f"{fit.n_cycles} cycles, r = {fit.pearson_r:.3f}, "
                  f"slope {fit.slope:.2f} vs gamma N^2/4 = {reference:.1f}, "
                  f"first-law residual {residual:.1e}")


def test_criterion_11_cli_determinism(tmp_path):
    args = ("ensemble", "--n", "3", "--gamma", "0.4", "--omega", "3",
            "--t-final", "20", "--dt", "1e-3", "--record-stride", "20",
            "--n-traj", "24", "--seed", "123")
    data_files = ("ensemble.json", "periods.csv", "clock_stats.json")
    digests = {}
    for workers in (1, 2, 8):
        out = tmp_path / f"w{workers}"
        assert cli_main([*args, "--threads", str(workers), "--output-dir", str(out)]) == 0
        digests[workers] = tuple((out / f).read_bytes() for f in data_files)
    repeat = tmp_path / "w2_repeat"
    assert cli_main([*args, "--threads", "2", "--output-dir", str(repeat)]) == 0
    digests["repeat"] = tuple((repeat / f).read_bytes() for f in data_files)

    identical = all(d == digests[1] for d in digests.values())
    manifest = json.loads((tmp_path / "w1" / "manifest.json").read_text())
    ok = identical and manifest["status"] == "complete"
    _line(11, ok, f"data files byte-identical across workers 1/2/8 and repeat: {identical}")
