"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test prints a single ``PASS``/``FAIL`` line naming its criterion.
"""
import json
import time

import numpy as np
import pytest

from conftest import QUASI_MODES
from mbelab.cli import main
from mbelab.dynamics import RhsKind, average_of_rhs_numeric, averaged_rhs
from mbelab.equilibria import (
    harmonic_z1,
    harmonic_z2,
    locate_stability_flip,
    spectrum_distance,
    spectrum_numeric,
    spectrum_z1,
    spectrum_z2,
    stationarity_residual,
)
from mbelab.errors import BallViolation
from mbelab.experiments import (
    default_workers,
    run_adiabatic_asymptotics,
    run_apriori_check,
    run_attraction,
    run_kbm_order,
    run_pure_vs_mixed,
    run_stable_asymptotics,
)
from mbelab.integrator import integrate
from mbelab.model import ModelParams, Pumping, PureState, default_params

WORKERS = default_workers()
THETAS = np.linspace(0, 2 * np.pi, 64, endpoint=False)


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail, elapsed, budget):
        ok = bool(ok) and elapsed < budget
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail} [{elapsed:.1f} s / {budget:g} s]")
        assert ok, detail

    return emit


def test_criterion_01_stationarity(report):
    t0 = time.perf_counter()
    worst = 0.0
    P = Pumping(1.0)
    for r in (2.0, 5.0):
        params = default_params(1e-3, r)
        beta = params.beta_r(P.Ae)
        states = [harmonic_z1(params, P, th) for th in THETAS]
        states += [harmonic_z2(params, P, s3) for s3 in np.linspace(-beta, beta, 64)]
        worst = max(worst, max(stationarity_residual(s, params, P) for s in states))
    report(1, "stationarity", worst < 1e-12, f"max residual {worst:.2e} < 1e-12", time.perf_counter() - t0, 1)


def test_criterion_02_spectrum_equivalence(report):
    t0 = time.perf_counter()
    worst = 0.0
    for r in (0.5, 1.0, 2.0, 5.0):
        params = default_params(1e-3, r)
        for a in (0.1, 0.5, 0.9 * r):
            P = Pumping(a)
            for th in THETAS:
                try:
                    cf = spectrum_z1(params, P, th)
                except BallViolation:
                    continue
                num = spectrum_numeric(harmonic_z1(params, P, th), params, P)
                worst = max(worst, spectrum_distance(cf.eigenvalues, num.eigenvalues))
            if params.c * r > a:
                beta = params.beta_r(P.Ae)
                for s3 in np.linspace(-beta, beta, 64):
                    num = spectrum_numeric(harmonic_z2(params, P, s3), params, P)
                    worst = max(worst, spectrum_distance(spectrum_z2(params, P, s3).eigenvalues, num.eigenvalues))
    lo, hi = locate_stability_flip(default_params(1e-3, 2.0), Pumping(1.0))
    flip = max(abs(lo), abs(hi))
    ok = worst < 1e-9 and flip < 1e-12
    report(2, "spectrum equivalence", ok, f"max spectral distance {worst:.2e} < 1e-9, flip at |S3| <= {flip:.1e}", time.perf_counter() - t0, 5)


def test_criterion_03_conservation(report):
    params = default_params(1e-3, 2.0)
    P = Pumping(1.0, modes=QUASI_MODES)
    y0 = [0.5, -0.2, 0.0, 0.6, -0.8]
    drift, trace_err, slowest = 0.0, 0.0, 0.0
    for kind in (RhsKind.FULL, RhsKind.INTERACTION):
        t0 = time.perf_counter()
        tr = integrate(kind, y0, (0.0, 1.0 / params.p), params, P, tol=1e-10, include_steps=True)
        slowest = max(slowest, time.perf_counter() - t0)
        n = np.linalg.norm(tr.S, axis=1)
        drift = max(drift, float(np.max(np.abs(n - n[0]))))
        s3 = tr.S[:, 2]
        trace_err = max(trace_err, float(np.max(np.abs(0.5 * (1 + s3) + 0.5 * (1 - s3) - 1.0))))
    ok = drift < 1e-9 and trace_err == 0.0
    report(3, "conservation", ok, f"| |S|-|S0| | {drift:.2e} < 1e-9, trace error {trace_err:g}", slowest, 10)


def test_criterion_04_pure_mixed(report):
    t0 = time.perf_counter()
    params = default_params(1e-2, 2.0)
    rep = run_pure_vs_mixed(params, Pumping(0.8, modes=QUASI_MODES), PureState(0.6, 0.8j), 0.3 - 0.1j, horizon=100.0, tol=1e-10)
    row = rep.rows[0]
    ok = row["max_frobenius"] < 1e-8
    report(4, "pure/mixed oracle", ok, f"max Frobenius {row['max_frobenius']:.2e} < 1e-8", time.perf_counter() - t0, 2)


def test_criterion_05_averaging(report):
    t0 = time.perf_counter()
    P = Pumping(0.6 - 0.3j, modes=QUASI_MODES)
    rng = np.random.default_rng(11)
    res = default_params(1e-2, 2.0)
    off = ModelParams.from_ratio(1e-2, 2.0, omega1=0.0, omega2=1.0, Omega=1.3)
    rel_res = rel_off = s_drift = 0.0
    for _ in range(4):
        y = np.concatenate([rng.uniform(-1, 1, 2), [0.3, -0.4, 0.5]])
        exact = averaged_rhs(y, res, P) / res.p
        num = average_of_rhs_numeric(y, res, P, 1e4 * 2 * np.pi / res.Omega)
        rel_res = max(rel_res, np.linalg.norm(num - exact) / np.linalg.norm(exact))
        exact = averaged_rhs(y, off, P, RhsKind.AVERAGED_NON_RESONANT) / off.p
        assert np.all(exact[2:] == 0.0)
        num = average_of_rhs_numeric(y, off, P, 1e4 * 2 * np.pi / off.Omega)
        rel_off = max(rel_off, np.linalg.norm(num - exact) / np.linalg.norm(exact))
        s_drift = max(s_drift, np.linalg.norm(num[2:]) / np.linalg.norm(exact))
    ok = rel_res < 1e-3 and rel_off < 1e-3 and s_drift < 1e-3
    detail = f"resonant rel {rel_res:.1e}, off-resonant rel {rel_off:.1e}, S-drift rel {s_drift:.1e} (all < 1e-3)"
    report(5, "averaging consistency", ok, detail, time.perf_counter() - t0, 30)


def test_criterion_06_adiabatic(report):
    # single-mode pumping makes Z2 states exact solutions (E = 0), so the
    # quasiperiodic pump is what exercises the asymptotics
    t0 = time.perf_counter()
    P = Pumping(1.0, modes=QUASI_MODES)
    params = default_params(1e-2, 2.0)
    beta = params.beta_r(P.Ae)
    p_list = [1e-2, 3e-3, 1e-3, 3e-4]
    parts, ok = [], True
    for label, st in (
        ("Z1(1)", harmonic_z1(params, P, 1.0)),
        ("Z2(+b/2)", harmonic_z2(params, P, beta / 2)),
        ("Z2(-b/2)", harmonic_z2(params, P, -beta / 2)),
    ):
        rep = run_adiabatic_asymptotics(params, P, 2.0, p_list, st, tol=1e-10, workers=WORKERS)
        ok &= rep.passed
        parts.append(f"{label} slope {rep.slope:.2f}")
    report(6, "adiabatic asymptotics", ok, "ratios non-increasing within 1.5, " + ", ".join(parts), time.perf_counter() - t0, 300)


def test_criterion_07_stable(report):
    t0 = time.perf_counter()
    params = default_params(3e-3, 2.0)
    rep = run_stable_asymptotics(
        params, Pumping(1.0), 0.05, None, [3e-3, 1e-3], samples=16, seed=7, r_list=[2.0, 5.0], d_halvings=1, workers=WORKERS
    )
    Cs = [row["C"] for row in rep.rows]
    detail = f"C in [{min(Cs):.2f}, {max(Cs):.2f}], max limit/(sqrt p + d) {max(r['limit_ratio'] for r in rep.rows):.2f}"
    report(7, "stable asymptotics", rep.passed, detail, time.perf_counter() - t0, 600)


def test_criterion_08_attraction(report):
    t0 = time.perf_counter()
    params = default_params(3e-3, 2.0)
    rep = run_attraction(params, Pumping(1.0), 0.05, None, samples=16, seed=7, r_list=[2.0, 5.0], d_halvings=1, workers=WORKERS)
    Cs = [row["C"] for row in rep.rows]
    viol = sum(row["decay_violations"] for row in rep.rows)
    detail = f"C in [{min(Cs):.2f}, {max(Cs):.2f}], normal-decay violations {viol}"
    report(8, "attraction", rep.passed, detail, time.perf_counter() - t0, 120)


def test_criterion_09_kbm(report):
    t0 = time.perf_counter()
    params = default_params(1e-2, 2.0)
    box = ((-1.0, 0.0, -0.5, 0.0, 0.5), (0.1,) * 5)
    spreads, ok = [], True
    for P in (Pumping(1.0), Pumping(1.0, modes=QUASI_MODES)):
        rep = run_kbm_order(params, P, [1e-2, 1e-3, 1e-4], box, workers=WORKERS)
        ok &= rep.passed
        spreads.append(rep.config["variation"])
    detail = "delta/p variation " + ", ".join(f"{s:.1%}" for s in spreads) + " (< 10%)"
    report(9, "KBM order", ok, detail, time.perf_counter() - t0, 60)


def test_criterion_10_boundedness(report):
    t0 = time.perf_counter()
    params = default_params(1e-2, 2.0)
    inits = [[a, 0.0, 0.0, 0.6, -0.8] for a in (0.25, 0.5, 1.0, 2.0)]
    rep = run_apriori_check(params, Pumping(1.0, modes=QUASI_MODES), inits, horizon=10 / params.gamma, workers=WORKERS)
    pairs = ", ".join(f"{s:.2f}<={e:.2f}" for s, e in zip(rep.sup_energy, rep.envelope))
    report(10, "boundedness", rep.passed, f"C = {rep.C:.3f}, sup A^2+B^2 vs envelope: {pairs}", time.perf_counter() - t0, 120)


def test_criterion_11_determinism(report, tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "cfg.json"
    files = {}
    ok = True
    for name, opts in (
        ("stable", {"p_list": [1e-2], "r_list": [2.0, 5.0], "samples": 4, "d_halvings": 1}),
        ("adiabatic", {"p_list": [1e-2, 3e-3, 1e-3]}),
        ("kbm", {}),
    ):
        cfg.write_text(json.dumps({"schema_version": 1, "seed": 3, "experiment": {"name": name, **opts}}))
        for tag, w in (("w1", 1), ("w2", 2), ("w2b", 2)):
            out = tmp_path / f"{name}_{tag}"
            ok &= main(["experiment", "--config", str(cfg), "--out", str(out), "--workers", str(w)]) == 0
            files[name, tag] = sorted((p.name, p.read_bytes()) for p in out.iterdir())
        ok &= files[name, "w1"] == files[name, "w2"] == files[name, "w2b"]
    report(11, "determinism", ok, "report and curve files byte-identical for workers 1, 2 and rerun", time.perf_counter() - t0, 120)
