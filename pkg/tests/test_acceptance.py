"""Acceptance gate: one PASS/FAIL line per primary criterion."""

import subprocess
import sys

import numpy as np
import pytest
import scipy.linalg as sl

from mpform.analysis import (
    ManufacturedSolution,
    contraction_conditions,
    convergence_study,
    energy_monitor,
    error_norms,
    garding_check,
    mr_functional,
    random_admissible_spec,
)
from mpform.discretize import assemble_mass, assemble_stiffness, build_mesh, build_space
from mpform.evolve import make_scheme, solve_ivp
from mpform.opsandbox import accretivity_check, evolution_family_checks, random_problem, right_left_equivalence
from mpform.presets import preset, preset_solution
from mpform.problem import MatrixField, ellipticity_constants, validate_spec

PI = np.pi


@pytest.fixture
def report(capsys):
    def emit(num, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {num:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def _heat_pencil(N):
    spec = preset("heat-dirichlet")
    space = build_space(build_mesh(N), spec)
    K = assemble_stiffness(space, spec, 0.0).toarray()
    M = assemble_mass(space, spec.H, 0.0, invert=True).toarray()
    return K, M


def test_c01_spectral_sanity(report):
    K, M = _heat_pencil(200)
    lam = sl.eigh(K, M, eigvals_only=True)[0]
    rel = abs(lam / PI**2 - 1)
    report(1, rel <= 0.01, f"lambda_min = {lam:.8f}, pi^2 = {PI**2:.8f}, relative gap {rel:.2e} (tol 1e-2)")


def test_c02_exact_heat_solution(report):
    spec = preset("heat-dirichlet", T=0.1)
    exact = ManufacturedSolution.separable(
        1, lambda t: np.exp(-PI**2 * t), lambda t: -PI**2 * np.exp(-PI**2 * t),
        lambda z: np.sin(PI * z), lambda z: PI * np.cos(PI * z), lambda z: -PI**2 * np.sin(PI * z))
    space = build_space(build_mesh(200), spec)
    traj = solve_ivp(space, spec, make_scheme("implicit-euler", 1e-4, 0.1), lambda z: np.sin(PI * z))
    err = error_norms(traj, spec, exact)[1]
    report(2, err <= 5e-4, f"C(L2) error {err:.3e} (tol 5e-4)")


def test_c03_convergence_orders(report):
    lines, ok = [], True
    for name in ("heat-dirichlet", "heat-robin"):
        sol = preset_solution(name)
        ie = convergence_study(preset(name), sol, scheme="implicit-euler")
        cn = convergence_study(preset(name), sol, scheme="crank-nicolson")
        good = abs(ie.order_h - 2) <= 0.3 and abs(ie.order_tau - 1) <= 0.3 and abs(cn.order_tau - 2) <= 0.3
        ok &= good
        lines.append(f"{name}: h {ie.order_h:.3f}, tau(IE) {ie.order_tau:.3f}, tau(CN) {cn.order_tau:.3f}")
    report(3, ok, "; ".join(lines) + " (targets 2, 1, 2 +- 0.3)")


def test_c04_garding_suite(report):
    rng = np.random.default_rng(4)
    worst, ok = np.inf, True
    for _ in range(50):
        spec = random_admissible_spec(rng)
        rep = validate_spec(spec)
        est = ellipticity_constants(rep, p0_sup=rep.p0_sup)
        for N in (8, 32):
            space = build_space(build_mesh(N), spec)
            for t in (0.0, 0.5 * spec.T, spec.T):
                g = garding_check(space, spec, t, est.omega, est.alpha)
                ok &= g.passed
                worst = min(worst, g.margin - g.threshold)
    report(4, ok, f"50 specs x N in (8, 32) x 3 times, smallest margin above threshold {worst:.3e}")


def test_c05_contraction_suite(report):
    spec = preset("damped-wave-free")
    cond = contraction_conditions(spec)
    space = build_space(build_mesh(64), spec)
    traj = solve_ivp(space, spec, make_scheme("implicit-euler", 1e-3, 1.0),
                     lambda z: np.stack([np.cos(PI * z), z * (1 - z)], -1))
    en = energy_monitor(traj, rtol=1e-10)
    ok = cond.all_pass and cond.sufficient and en.required and en.monotone and traj.times.size == 1001
    report(5, ok, f"conditions i/ii/iii = {cond.c_i}/{cond.c_ii}/{cond.c_iii}; "
                  f"1000 steps, max relative increase {en.max_increase:.2e} (tol 1e-10)")


def test_c06_accretivity(report):
    K, M = _heat_pencil(200)
    heat = accretivity_check(np.linalg.solve(M, K), 0.0, PI / 4, gram=M)
    skew = accretivity_check(np.array([[0.0, 1.0], [-1.0, 0.0]]), 0.0, PI / 4)
    report(6, heat.passed and not skew.passed,
           f"heat margin {heat.margin:.4e} (passes), skew margin {skew.margin:.4f} (fails)")


def test_c07_right_left_transform(report):
    rng = np.random.default_rng(7)
    gaps = []
    for j in range(20):
        prob = random_problem(rng, N=8, with_C=bool(j % 2))
        gaps.append(right_left_equivalence(prob, tol=1e-6, rtol=1e-10).gap)
    worst = max(gaps)
    report(7, worst <= 1e-6, f"20 problems, max |u - B^-1 v| = {worst:.3e} (tol 1e-6)")


def test_c08_evolution_family(report):
    rng = np.random.default_rng(8)
    reps = [evolution_family_checks(random_problem(rng, N=8, with_C=bool(j % 2))) for j in range(4)]
    cV = max(r.cocycle_V for r in reps)
    cP = max(r.cocycle_Phi for r in reps)
    dh = max(r.duhamel_gap for r in reps)

    spec = preset("damped-wave-free", h_scale=lambda t: 1 + 0.5 * t)
    space = build_space(build_mesh(32), spec)
    sc = make_scheme("implicit-euler", 0.01, 1.0)
    full = solve_ivp(space, spec, sc, lambda z: np.stack([np.cos(PI * z), z**2], -1))
    m = sc.index(0.37)
    rest = solve_ivp(space, spec, sc, full.coeffs[m], t0=0.37)
    rs = np.abs(rest.coeffs - full.coeffs[m:]).max() / np.abs(full.coeffs).max()
    ok = cV <= 1e-8 and cP <= 1e-8 and dh <= 1e-6 and rs <= 1e-12
    report(8, ok, f"cocycle V {cV:.2e}, Phi {cP:.2e} (tol 1e-8); Duhamel {dh:.2e} (tol 1e-6); "
                  f"restart {rs:.2e} (tol 1e-12)")


def test_c09_maximal_regularity_surrogate(report):
    cases = {
        "heat-dirichlet": (preset("heat-dirichlet"), MatrixField.constant([[1.0]]), None),
        "damped-wave-dirichlet": (preset("damped-wave-dirichlet", h_scale=lambda t: 1 + 0.5 * t), None,
                                  preset_solution("damped-wave-dirichlet")),
    }
    lines, ok = [], True
    for name, (spec, f, sol) in cases.items():
        ratios = []
        for N, steps in ((50, 400), (100, 1600), (200, 6400)):
            space = build_space(build_mesh(N), spec)
            x0 = None if sol is None else (lambda z: sol.v(0.0, np.atleast_1d(z)))
            traj = solve_ivp(space, spec, make_scheme("implicit-euler", spec.T / steps, spec.T), x0, f=f)
            ratios.append(mr_functional(traj, spec, 2.0).ratio)
        spread = max(ratios) / min(ratios)
        ok &= spread <= 2.0
        lines.append(f"{name}: ratios {', '.join(f'{r:.4f}' for r in ratios)}, spread {spread:.3f}")
    report(9, ok, "; ".join(lines) + " (tol 2)")


def test_c10_determinism(report, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[problem]\npreset = "damped-wave-free"\n[mesh]\nN = 32\n[time]\ntau = 0.01\nT = 0.3\n'
                   '[initial]\nkind = "cosine"\n[output]\nsnapshots = [0.1, 0.2]\n', encoding="utf-8")
    outs = []
    for d in ("a", "b"):
        res = subprocess.run([sys.executable, "-m", "mpform.cli", "run", "--config", str(cfg),
                              "--out", str(tmp_path / d)], capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        outs.append(tmp_path / d)
    files = sorted(p.name for p in outs[0].glob("*.csv"))
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files)
    report(10, same and len(files) >= 4, f"{len(files)} CSV files byte-identical: {same}")
