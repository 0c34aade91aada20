"""Command-line entry point.

``mpform run|verify|converge|opcheck [--config FILE] [--out DIR] [--seed N] [--levels N]``
and ``mpform presets``.  Every suite writes ``report.csv`` and ``summary.txt``;
the exit status is 0 iff every check of the suite passed, 1 if one failed
(the first is named on stderr) and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .analysis import (
    contraction_conditions,
    convergence_study,
    energy_monitor,
    form_operator_duality,
    garding_check,
)
from .config import Config, build_forcing, build_initial, build_problem, load_config, loads_config
from .discretize import assemble_mass, assemble_stiffness, build_mesh, build_space
from .errors import MpformError, ParseError, SemanticError
from .evolve import make_scheme, solve_ivp, write_trajectory_csv
from .opsandbox import (
    accretivity_check,
    associated_operator,
    b_derivative_identities,
    evolution_family_checks,
    random_problem,
    right_left_equivalence,
    sector_bound_check,
    weighted_product_generator,
)
from .presets import PRESETS, preset, preset_solution
from .problem import ellipticity_constants, validate_spec

__all__ = ["main", "run", "Check"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    t: float = 0.0
    about: str = ""


def _f(x) -> str:
    return repr(float(x))


def _write_report(checks, out_dir):
    path = os.path.join(out_dir, "report.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "check", "passed", "value"])
        for c in checks:
            w.writerow([_f(c.t), c.name, int(c.passed), _f(c.value)])
    return path


def _write_summary(suite, label, checks, out_dir):
    path = os.path.join(out_dir, "summary.txt")
    lines = [f"suite: {suite}", f"problem: {label}", ""]
    for c in checks:
        lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  value={_f(c.value)}  [{c.about}]")
    ok = all(c.passed for c in checks)
    lines += ["", f"result: {'all checks passed' if ok else 'FAILED'}"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


# ------------------------------------------------------------------ suites
def _assumption_check(spec):
    rep = validate_spec(spec)
    return rep, Check("assumptions", rep.ok, 0.0 if rep.ok else 1.0,
                      about="standing coefficient assumptions" + ("" if rep.ok else f"; first failure {rep.first_failure}"))


def _trajectory(cfg: Config, spec, out_dir):
    space = build_space(build_mesh(cfg.mesh["N"], cfg.mesh["quadrature"]), spec)
    scheme = make_scheme(cfg.time["scheme"], float(cfg.time["tau"]), float(cfg.time["T"]), spec.breakpoints)
    traj = solve_ivp(space, spec, scheme, build_initial(cfg, spec), f=build_forcing(cfg, spec))
    snaps = [scheme.t_grid[int(np.argmin(np.abs(scheme.t_grid - float(s))))] for s in cfg.output["snapshots"]]
    write_trajectory_csv(traj, os.path.join(out_dir, "trajectory.csv"), snaps)
    return traj


def _energy_check(traj):
    en = energy_monitor(traj)
    about = "energy (H u | u) non-increasing" + ("" if en.required else " (reported only)")
    return Check("energy-monotone", en.passed, en.max_increase, t=float(traj.times[-1]), about=about)


def suite_solve(cfg, spec, out_dir):
    _, chk = _assumption_check(spec)
    checks = [chk]
    if chk.passed:
        checks.append(_energy_check(_trajectory(cfg, spec, out_dir)))
    return checks


def suite_verify(cfg, spec, out_dir):
    rep, chk = _assumption_check(spec)
    checks = [chk]
    if not chk.passed:
        return checks
    cc = contraction_conditions(spec)
    checks += [
        Check("contraction-i", cc.c_i, cc.margins["i"], about="boundary condition of the contraction criterion"),
        Check("contraction-ii", cc.c_ii, cc.margins["ii"], about="zeroth/first-order sign condition"),
        Check("contraction-iii", cc.c_iii, cc.margins["iii"], about="P1 self-adjoint"),
    ]
    est = ellipticity_constants(rep, p0_sup=rep.p0_sup)
    for N in (8, 32, 128):
        space = build_space(build_mesh(N, cfg.mesh["quadrature"]), spec)
        for t in sorted({0.0, float(spec.T)}):
            g = garding_check(space, spec, t, est.omega, est.alpha)
            checks.append(Check(f"garding-N{N}-t{t:g}", g.passed, g.margin, t=t, about="Garding inequality with (omega, alpha)"))
    if cfg.preset is not None:
        sol = preset_solution(cfg.preset)
        d = [form_operator_duality(spec, sol, N) for N in (8, 16, 32)]
        ok = d[2] <= d[0] * 0.5 or d[2] <= 1e-12
        checks.append(Check("form-operator-duality", bool(ok), d[2], about="a(I_h v, .) - (A v | .) -> 0 in V_h'"))
    checks.append(_energy_check(_trajectory(cfg, spec, out_dir)))
    return checks


def suite_converge(cfg, spec, out_dir):
    if cfg.preset is None:
        raise SemanticError("the converge suite needs a preset (it uses the preset's exact solution)", "problem.preset")
    _, chk = _assumption_check(spec)
    checks = [chk]
    if not chk.passed:
        return checks
    sol = preset_solution(cfg.preset)
    levels = cfg.suite["levels"]
    rows = []
    for kind, lo, hi in (("implicit-euler", 0.7, 1.3), ("crank-nicolson", 1.7, 2.3)):
        rep = convergence_study(spec, sol, levels, kind)
        if kind == "implicit-euler":
            checks.append(Check("order-h", abs(rep.order_h - rep.space_order) <= 0.3, rep.order_h, t=spec.T,
                                about=f"spatial order {rep.space_order}"))
        checks.append(Check(f"order-tau-{kind}", lo <= rep.order_tau <= hi, rep.order_tau, t=spec.T,
                            about=f"temporal order {1 if kind == 'implicit-euler' else 2}"))
        for j in range(levels):
            rows.append([kind, "space", j, rep.h[j], rep.tau_h[j], rep.err_h_l2l2[j], rep.err_h_cl2[j]])
        for j in range(levels):
            rows.append([kind, "time", j, 1.0 / rep.N_tau, rep.tau[j], rep.err_tau_l2l2[j], rep.err_tau_cl2[j]])
    with open(os.path.join(out_dir, "convergence.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "scheme", "sweep", "level", "h", "tau", "err_l2l2", "err_cl2"])
        for r in rows:
            w.writerow([_f(spec.T), r[0], r[1], r[2]] + [_f(x) for x in r[3:]])
    return checks


def suite_opcheck(cfg, spec, out_dir, tol=1e-6):
    rng = np.random.default_rng(cfg.suite["seed"])
    checks = []
    heat = preset("heat-dirichlet")
    space = build_space(build_mesh(64), heat)
    K = assemble_stiffness(space, heat, 0.0).toarray()
    M = assemble_mass(space, heat.H, 0.0, invert=True).toarray()
    A = np.linalg.solve(M, K)
    acc = accretivity_check(A, 0.0, np.pi / 4, gram=M)
    checks.append(Check("accretive-heat", acc.passed, acc.margin, about="e^{+-i theta}(omega + A) accretive"))
    skew = accretivity_check(np.array([[0.0, 1.0], [-1.0, 0.0]]), 0.0, np.pi / 4)
    checks.append(Check("accretive-skew-rejected", not skew.passed, skew.margin, about="counterexample is detected"))
    sb = sector_bound_check(A, 0.0, np.pi / 4, gram=M)
    checks.append(Check("sector-bound-heat", sb.passed, sb.worst_ratio, about="|exp(-zA)| <= exp(omega|z|) on the sector"))
    lam = float(np.min(np.linalg.eigvals(associated_operator(K, M).A).real))
    checks.append(Check("associated-operator-eigenvalue", abs(lam / np.pi**2 - 1) <= 0.01, lam,
                        about="lambda_min(M^{-1}K) ~ pi^2"))
    X = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    Y = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    wp = weighted_product_generator(X @ X.conj().T, Y @ Y.conj().T / 8 + np.eye(8))
    checks.append(Check("weighted-product", wp.passed, max(wp.form_defect, wp.similarity_defect),
                        about="BA associated under (B^{-1}.|.)"))
    gaps, fam = [], []
    for j in range(4):
        prob = random_problem(rng, 8, with_C=bool(j % 2))
        gaps.append(right_left_equivalence(prob, tol=tol, rtol=1e-10).gap)
        if j < 2:
            fam.append(evolution_family_checks(prob))
    checks.append(Check("right-left-transform", max(gaps) <= tol, max(gaps), about="u = B^{-1} v"))
    checks.append(Check("evolution-family-cocycle", all(f.cocycle_V <= 1e-8 and f.cocycle_Phi <= 1e-8 for f in fam),
                        max(max(f.cocycle_V, f.cocycle_Phi) for f in fam), about="V and Phi = B^{-1} V B"))
    checks.append(Check("duhamel", all(f.duhamel_gap <= tol for f in fam), max(f.duhamel_gap for f in fam),
                        about="variation of constants with Phi"))
    Z = 0.3 * rng.standard_normal((4, 4))
    bd = b_derivative_identities(lambda t: expm(t * Z), lambda t: Z @ expm(t * Z), rng=rng)
    checks.append(Check("inverse-derivative", bd.passed, bd.max_error, about="(B^{-1})' = -B^{-1} B' B^{-1}"))
    return checks


SUITE_FUNCS = {"solve": suite_solve, "verify": suite_verify, "converge": suite_converge, "opcheck": suite_opcheck}


def run(cfg: Config, out_dir: str | None = None) -> tuple[int, list[Check]]:
    """Execute the configured suite; returns ``(exit status, checks)``."""
    out_dir = cfg.output["dir"] if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    spec = build_problem(cfg)
    suite = cfg.suite["name"]
    checks = SUITE_FUNCS[suite](cfg, spec, out_dir)
    _write_report(checks, out_dir)
    label = cfg.preset or "inline coefficients"
    _write_summary(suite, label, checks, out_dir)
    failed = [c for c in checks if not c.passed]
    return (0 if not failed else 1), checks


# --------------------------------------------------------------------- main
_COMMAND_SUITE = {"run": "solve", "verify": "verify", "converge": "converge", "opcheck": "opcheck"}


def _parser():
    ap = argparse.ArgumentParser(prog="mpform", description="Solver and verification suites for parabolic port-type systems.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "solve and write the trajectory"), ("verify", "assumption, contraction, Garding and energy checks"),
                        ("converge", "refinement study against the preset's exact solution"),
                        ("opcheck", "finite-dimensional operator identities")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--preset", help="preset name (used when no --config is given)")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="random seed (overrides suite.seed)")
        p.add_argument("--levels", type=int, help="refinement levels (overrides suite.levels)")
    sub.add_parser("presets", help="list available presets")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "presets":
        for info in PRESETS.values():
            print(f"{info.name:24s} r={info.r}  params={','.join(info.parameters)}  {info.description}")
        return 0
    try:
        if args.config:
            cfg = load_config(args.config)
        else:
            cfg = loads_config(f'[problem]\npreset = "{args.preset or "heat-dirichlet"}"\n')
        upd = {"name": _COMMAND_SUITE[args.command]}
        if args.seed is not None:
            upd["seed"] = args.seed
        if args.levels is not None:
            upd["levels"] = args.levels
        out = {"dir": args.out} if args.out else {}
        cfg = cfg.with_updates(suite=upd, output=out)
        status, checks = run(cfg)
    except ParseError as exc:
        loc = f" (line {exc.line}, column {exc.column})" if exc.line is not None else ""
        print(f"error: {exc}{loc}", file=sys.stderr)
        return 2
    except SemanticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MpformError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {_f(c.value)}")
    if status:
        first = next(c for c in checks if not c.passed)
        print(f"first failing check: {first.name}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
