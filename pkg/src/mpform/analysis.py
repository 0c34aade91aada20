"""Verification harness: coercivity, contraction, energy, maximal-regularity
surrogates, manufactured solutions and refinement studies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse.linalg as spla

from .discretize import (
    DiscreteSpace,
    assemble_load,
    assemble_stiffness,
    build_mesh,
    build_space,
    interpolate,
    norms,
)
from .errors import IncompatibleBoundary
from .evolve import Trajectory, make_scheme, solve_ivp
from .problem import MatrixField, ProblemSpec, orthocomplement_basis

__all__ = [
    "GardingReport",
    "ContractionReport",
    "EnergyReport",
    "MRReport",
    "ConvergenceReport",
    "ManufacturedSolution",
    "garding_check",
    "contraction_conditions",
    "energy_monitor",
    "mr_functional",
    "manufactured_rhs",
    "strong_image",
    "boundary_residual",
    "convergence_study",
    "error_norms",
    "form_operator_duality",
    "random_admissible_spec",
]

PSD_TOL = 1e-12
FD_T = 1e-6


def _herm(X):
    return 0.5 * (X + np.conj(np.swapaxes(X, -1, -2)))


# --------------------------------------------------------------------- Garding
@dataclass(frozen=True)
class GardingReport:
    margin: float
    threshold: float
    omega: float
    alpha: float
    passed: bool


def garding_check(space: DiscreteSpace, spec: ProblemSpec, t: float, omega: float, alpha: float) -> GardingReport:
    """Smallest eigenvalue of ``Herm(K(t)) + omega M_I - alpha M_V``.

    Passes iff it is at least ``-1e-10 |K|_2``.
    """
    K = assemble_stiffness(space, spec, t).toarray()
    X = _herm(K) + omega * space.gram_l2.toarray() - alpha * space.gram_v.toarray()
    margin = float(np.linalg.eigvalsh(_herm(X))[0])
    thr = -1e-10 * float(np.linalg.norm(K, 2))
    return GardingReport(margin=margin, threshold=thr, omega=float(omega), alpha=float(alpha), passed=margin >= thr)


# ----------------------------------------------------------------- contraction
@dataclass(frozen=True)
class ContractionReport:
    c_i: bool
    c_ii: bool
    c_iii: bool
    c_ii_ibp: bool
    margins: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return self.c_i and self.c_ii and self.c_iii

    @property
    def sufficient(self) -> bool:
        """Conditions under which ``Re a(v, v) >= 0`` on the whole space is proved."""
        return self.c_i and self.c_iii and self.c_ii_ibp


def contraction_conditions(spec: ProblemSpec, nt: int = 17, nz: int = 65) -> ContractionReport:
    """Sufficient conditions for ``Re a(t, v, v) >= 0``.

    * ``c_i``: ``W_R + F* diag(G*P1(1)G, -G*P1(0)G) F >= 0`` on the time grid.
    * ``c_ii``: ``Herm(P0 + GG*P1' + 1/2 GG*P1'GG*) <= 0`` on the zeta grid.
    * ``c_iii``: ``P1 = P1*``.
    * ``c_ii_ibp``: ``Herm(P0 + (I-GG*)P1'GG* + 1/2 GG*P1'GG*) <= 0``, the form
      that integration by parts of the first-order terms actually produces.
    """
    G, F, n, k, r = spec.G, spec.F, spec.n, spec.k, spec.r
    z = np.linspace(0.0, 1.0, nz)
    t_grid = np.linspace(0.0, spec.T, nt)
    Pi = G @ G.conj().T
    Pp = np.eye(n) - Pi
    margins = {}

    P1 = spec.P1.eval(0.0, z)
    p1s = max(1.0, float(np.abs(P1).max()))
    skew = float(np.abs(P1 - np.conj(np.swapaxes(P1, -1, -2))).max()) if P1.size else 0.0
    margins["iii"] = -skew
    c_iii = skew <= PSD_TOL * p1s

    if r:
        end1 = G.conj().T @ spec.P1.eval(0.0, 1.0) @ G
        end0 = G.conj().T @ spec.P1.eval(0.0, 0.0) @ G
        D = np.zeros((2 * k, 2 * k), dtype=complex)
        D[:k, :k], D[k:, k:] = end1, -end0
        Fd = F.conj().T @ D @ F
        worst = np.inf
        for t in t_grid:
            X = spec.W_R.eval(t, 0.0) + Fd
            worst = min(worst, float(np.linalg.eigvalsh(_herm(X))[0]))
        scale = max(1.0, float(np.linalg.norm(Fd, 2)))
        margins["i"] = worst
        c_i = worst >= -PSD_TOL * scale
    else:
        margins["i"] = 0.0
        c_i = True

    dP1 = spec.P1.eval_dzeta(0.0, z)
    P0 = spec.P0.eval(0.0, z)
    scale = max(1.0, float(np.abs(dP1).max()), float(np.abs(P0).max()))
    printed = P0 + Pi @ dP1 + 0.5 * Pi @ dP1 @ Pi
    ibp = P0 + Pp @ dP1 @ Pi + 0.5 * Pi @ dP1 @ Pi
    lam_p = float(np.linalg.eigvalsh(_herm(printed))[:, -1].max())
    lam_i = float(np.linalg.eigvalsh(_herm(ibp))[:, -1].max())
    margins["ii"], margins["ii_ibp"] = -lam_p, -lam_i
    return ContractionReport(
        c_i=bool(c_i), c_ii=lam_p <= PSD_TOL * scale, c_iii=bool(c_iii), c_ii_ibp=lam_i <= PSD_TOL * scale,
        margins=margins,
    )


# ---------------------------------------------------------------------- energy
@dataclass(frozen=True, eq=False)
class EnergyReport:
    times: np.ndarray
    energy: np.ndarray
    max_increase: float
    monotone: bool
    required: bool

    @property
    def passed(self) -> bool:
        return self.monotone or not self.required


def energy_monitor(traj: Trajectory, spec: ProblemSpec | None = None, rtol: float = 1e-10) -> EnergyReport:
    """``E_m = (H u_m | u_m)`` and its largest relative per-step increase.

    Monotonicity is *required* only for autonomous coefficients, implicit
    Euler and a spec meeting the sufficient contraction conditions; otherwise
    it is reported.
    """
    spec = traj.spec if spec is None else spec
    E = np.asarray(traj.energy, dtype=float)
    if E.size > 1:
        jumps = (E[1:] - E[:-1]) / np.maximum(np.abs(E[:-1]), np.finfo(float).tiny)
        jumps = np.where(E[:-1] == 0.0, np.where(E[1:] > 0.0, np.inf, 0.0), jumps)
        max_inc = float(max(jumps.max(), 0.0))
    else:
        max_inc = 0.0
    monotone = max_inc <= rtol
    required = (
        spec.autonomous
        and traj.scheme.kind == "implicit-euler"
        and contraction_conditions(spec).sufficient
    )
    return EnergyReport(times=traj.times, energy=E, max_increase=max_inc, monotone=bool(monotone), required=bool(required))


# ------------------------------------------------------------ MR surrogate
@dataclass(frozen=True)
class MRReport:
    du_norm: float
    Au_norm: float
    u_norm: float
    data_norm: float
    ratio: float
    p: float


def _l2_at_quadrature(space: DiscreteSpace, vals: np.ndarray) -> float:
    # vals: (N, q, n) at the mesh's own quadrature points
    w = space.mesh.weights
    return float(np.sqrt(np.sum(w[..., None] * np.abs(vals) ** 2)))


def mr_functional(traj: Trajectory, spec: ProblemSpec | None = None, p: float = 2.0) -> MRReport:
    """Discrete ``L^p(0,T;L^2)`` norms of ``D_tau u``, ``f - D_tau u`` and ``u``.

    Time integrals use the right-endpoint rule of the backward differences.
    ``ratio = (du + Au + u) / (|x0|_V + |f|)``, defined as 0 for zero data.
    """
    if not 1.0 < p < np.inf:
        raise ValueError(f"p must lie in (1, inf), got {p}")
    spec = traj.spec if spec is None else spec
    space = traj.space
    mesh = space.mesh
    f = traj.f
    taus = np.diff(traj.times)
    us = [traj.u_values(m) for m in range(traj.times.size)]
    du = np.empty(taus.size)
    au = np.empty(taus.size)
    un = np.empty(taus.size)
    fn = np.empty(taus.size)
    for m in range(1, traj.times.size):
        d = (us[m] - us[m - 1]) / taus[m - 1]
        fm = f.eval(traj.times[m], mesh.points.ravel()).reshape(mesh.N, mesh.q, spec.n)
        du[m - 1] = _l2_at_quadrature(space, d)
        au[m - 1] = _l2_at_quadrature(space, fm - d)
        un[m - 1] = _l2_at_quadrature(space, us[m])
        fn[m - 1] = _l2_at_quadrature(space, fm)

    def lp(x):
        return float(np.sum(taus * x**p) ** (1.0 / p))

    x0V = norms(space, traj.coeffs[0])[1]
    data = x0V + lp(fn)
    num = lp(du) + lp(au) + lp(un)
    ratio = 0.0 if data == 0.0 else num / data
    return MRReport(du_norm=lp(du), Au_norm=lp(au), u_norm=lp(un), data_norm=data, ratio=float(ratio), p=float(p))


# ------------------------------------------------------ manufactured solutions
Fn = Callable[[float, np.ndarray], np.ndarray]


def _as_field(fn: Fn, n: int):
    def out(t, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return np.asarray(fn(t, z), dtype=complex).reshape(z.size, n)

    return out


def _dt(fld: MatrixField, t: float, z, T: float, delta: float = FD_T):
    if not fld.time_dependent:
        return np.zeros_like(fld.eval(t, z))
    if t - delta >= 0.0 and t + delta <= T:
        return (fld.eval(t + delta, z) - fld.eval(t - delta, z)) / (2 * delta)
    s = 1.0 if t - delta < 0.0 else -1.0
    f0, f1, f2 = fld.eval(t, z), fld.eval(t + s * delta, z), fld.eval(t + 2 * s * delta, z)
    return s * (-3 * f0 + 4 * f1 - f2) / (2 * delta)


def _dzz(fld: MatrixField, t, z, delta=1e-4):
    if not fld.zeta_dependent:
        return np.zeros_like(fld.eval(t, z))
    zp = np.clip(z + delta, 0.0, 1.0)
    zm = np.clip(z - delta, 0.0, 1.0)
    return (fld.eval_dzeta(t, zp) - fld.eval_dzeta(t, zm)) / (zp - zm)[:, None, None]


@dataclass(frozen=True, eq=False)
class ManufacturedSolution:
    """Smooth exact solution given through ``v = H u`` and its derivatives.

    Every callable maps ``(t, zeta_array) -> (len(zeta), n)``.
    """

    n: int
    v: Fn
    v_t: Fn
    v_z: Fn
    v_zz: Fn
    name: str = ""

    @classmethod
    def zero(cls, n: int) -> "ManufacturedSolution":
        zero = lambda t, z: np.zeros((np.size(z), n))  # noqa: E731
        return cls(n=n, v=zero, v_t=zero, v_z=zero, v_zz=zero, name="zero")

    @classmethod
    def separable(cls, n: int, g: Callable, g_t: Callable, phi: Fn, phi_z: Fn, phi_zz: Fn, name: str = ""):
        """``v(t, zeta) = g(t) phi(zeta)`` with scalar ``g``."""
        return cls(
            n=n,
            v=lambda t, z: g(t) * np.asarray(phi(z)).reshape(np.size(z), n),
            v_t=lambda t, z: g_t(t) * np.asarray(phi(z)).reshape(np.size(z), n),
            v_z=lambda t, z: g(t) * np.asarray(phi_z(z)).reshape(np.size(z), n),
            v_zz=lambda t, z: g(t) * np.asarray(phi_zz(z)).reshape(np.size(z), n),
            name=name,
        )

    @classmethod
    def from_u(cls, spec: ProblemSpec, u: Fn, u_t: Fn, u_z: Fn, u_zz: Fn, name: str = "") -> "ManufacturedSolution":
        """Build from ``u`` by the product rule ``v = H u``."""
        n, H = spec.n, spec.H
        u, u_t, u_z, u_zz = (_as_field(g, n) for g in (u, u_t, u_z, u_zz))

        def mul(M, x):
            return np.einsum("mij,mj->mi", M, x)

        def v(t, z):
            return mul(H.eval(t, np.atleast_1d(z)), u(t, z))

        def v_t(t, z):
            z = np.atleast_1d(z)
            return mul(_dt(H, t, z, spec.T), u(t, z)) + mul(H.eval(t, z), u_t(t, z))

        def v_z(t, z):
            z = np.atleast_1d(z)
            return mul(H.eval_dzeta(t, z), u(t, z)) + mul(H.eval(t, z), u_z(t, z))

        def v_zz(t, z):
            z = np.atleast_1d(z)
            return (mul(_dzz(H, t, z), u(t, z)) + 2 * mul(H.eval_dzeta(t, z), u_z(t, z))
                    + mul(H.eval(t, z), u_zz(t, z)))

        return cls(n=n, v=v, v_t=v_t, v_z=v_z, v_zz=v_zz, name=name)

    def u(self, spec: ProblemSpec, t: float, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return np.linalg.solve(spec.H.eval(t, z), _as_field(self.v, self.n)(t, z)[..., None])[..., 0]

    def u_t(self, spec: ProblemSpec, t: float, z) -> np.ndarray:
        # u_t = H^{-1} (v_t - H' H^{-1} v)
        z = np.atleast_1d(np.asarray(z, dtype=float))
        Hz = spec.H.eval(t, z)
        uu = np.linalg.solve(Hz, _as_field(self.v, self.n)(t, z)[..., None])
        rhs = _as_field(self.v_t, self.n)(t, z)[..., None] - _dt(spec.H, t, z, spec.T) @ uu
        return np.linalg.solve(Hz, rhs)[..., 0]


def strong_image(spec: ProblemSpec, sol: ManufacturedSolution, t: float, z) -> np.ndarray:
    """``-(G S (G* v)' + P1 v)' - P0 v`` by the product rule."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    n, G = spec.n, spec.G
    v, vz, vzz = (_as_field(g, n)(t, z) for g in (sol.v, sol.v_z, sol.v_zz))
    w_z, w_zz = vz @ G.conj(), vzz @ G.conj()
    S, dS = spec.S.eval(t, z), spec.S.eval_dzeta(t, z)
    P1, dP1, P0 = spec.P1.eval(0.0, z), spec.P1.eval_dzeta(0.0, z), spec.P0.eval(0.0, z)
    flux_z = np.einsum("mab,mb->ma", dS, w_z) + np.einsum("mab,mb->ma", S, w_zz)
    out = -flux_z @ G.T
    out -= np.einsum("mij,mj->mi", dP1, v) + np.einsum("mij,mj->mi", P1, vz)
    out -= np.einsum("mij,mj->mi", P0, v)
    return out


def boundary_residual(spec: ProblemSpec, sol: ManufacturedSolution, t: float) -> float:
    """Residual of ``(I - FF*) C(v) = 0`` and ``F* B(v) + W_R F* C(v) = 0``.

    ``B(v) = [(S (G*v)' + G* P1 v)(1); -(S (G*v)' + G* P1 v)(0)]`` is the
    conormal flux left over by integrating the form by parts.
    """
    n, G, F = spec.n, spec.G, spec.F
    ends = np.array([1.0, 0.0])
    v = _as_field(sol.v, n)(t, ends)
    vz = _as_field(sol.v_z, n)(t, ends)
    S = spec.S.eval(t, ends)
    P1 = spec.P1.eval(0.0, ends)
    w, wz = v @ G.conj(), vz @ G.conj()
    flux = np.einsum("mab,mb->ma", S, wz) + np.einsum("ai,mij,mj->ma", G.conj().T, P1, v)
    C = np.concatenate([w[0], w[1]])
    Bv = np.concatenate([flux[0], -flux[1]])
    ess = np.linalg.norm(C - F @ (F.conj().T @ C))
    nat = np.linalg.norm(F.conj().T @ Bv + spec.W_R.eval(t, 0.0) @ (F.conj().T @ C)) if spec.r else 0.0
    return float(ess + nat)


def manufactured_rhs(spec: ProblemSpec, sol: ManufacturedSolution, check_times=None, tol: float = 1e-8) -> MatrixField:
    """Forcing ``f = u_t - (G S (G* v)' + P1 v)' - P0 v`` for an exact solution.

    Raises :class:`IncompatibleBoundary` when ``sol`` violates the boundary
    conditions of the operator domain by more than ``tol``.
    """
    ts = np.linspace(0.0, spec.T, 5) if check_times is None else np.atleast_1d(check_times)
    worst = max(boundary_residual(spec, sol, float(t)) for t in ts)
    if worst > tol:
        raise IncompatibleBoundary(f"manufactured solution violates the boundary conditions (residual {worst:.3e})")

    def f(t, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return (sol.u_t(spec, t, z) + strong_image(spec, sol, t, z))[..., None]

    return MatrixField.from_callable(f, (spec.n, 1), vectorized=True, name=f"f[{sol.name}]")


# ---------------------------------------------------------------- convergence
def error_norms(traj: Trajectory, spec: ProblemSpec, sol: ManufacturedSolution, q: int = 4) -> tuple[float, float]:
    """``(L^2(0,T;L^2), C([0,T];L^2))`` errors of ``u`` with a ``q``-point Gauss rule per cell."""
    mesh = traj.space.mesh
    xg, wg = np.polynomial.legendre.leggauss(q)
    xi, w = 0.5 * (xg + 1.0), 0.5 * wg
    z = (mesh.nodes[:-1, None] + mesh.h * xi[None, :]).ravel()
    wz = np.tile(mesh.h * w, mesh.N)
    errs = np.empty(traj.times.size)
    for m, t in enumerate(traj.times):
        uh = traj.u_values(m, xi).reshape(-1, spec.n)
        ue = sol.u(spec, t, z)
        errs[m] = np.sqrt(np.sum(wz[:, None] * np.abs(uh - ue) ** 2))
    taus = np.diff(traj.times)
    return float(np.sqrt(np.sum(taus * errs[1:] ** 2))), float(errs.max())


def _fit(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    scheme: str
    h: np.ndarray
    tau_h: np.ndarray
    err_h_l2l2: np.ndarray
    err_h_cl2: np.ndarray
    tau: np.ndarray
    N_tau: int
    err_tau_l2l2: np.ndarray
    err_tau_cl2: np.ndarray
    order_h: float
    order_tau: float
    order_h_l2l2: float
    order_tau_l2l2: float
    space_order: int = 2  # expected L^2 order in h of the element pair


def convergence_study(spec: ProblemSpec, sol: ManufacturedSolution, levels: int = 3, scheme: str = "implicit-euler",
                      N0: int = 8, tau0: float | None = None, N_fine: int | None = None, c_tau: float = 0.25,
                      q: int = 2) -> ConvergenceReport:
    """Separate spatial and temporal refinement sweeps against an exact solution.

    *Spatial*: ``N = N0 2^j`` with ``tau = c_tau h^{2/s}`` (``s`` the scheme
    order) so the time error decays like ``h^2`` as well.  *Temporal*: a fixed
    fine mesh and ``tau = tau0 2^{-j}``.  Orders are least-squares slopes of
    ``log(error)``; they are ``nan`` when an error vanishes.

    The expected spatial order is 2, or 1 when ``n > k`` (the piecewise-constant
    ``z = Q* v`` is first order in ``L^2``); the default fine mesh of the
    temporal sweep is refined further in that case.
    """
    if levels < 3:
        raise ValueError("a fitted order needs at least 3 levels")
    f = manufactured_rhs(spec, sol)
    scheme = make_scheme(scheme, 1.0, 1.0).kind
    s = 1 if scheme == "implicit-euler" else 2
    bps = spec.breakpoints

    def run(N, tau):
        space = build_space(build_mesh(N, q), spec)
        sch = make_scheme(scheme, tau, spec.T, bps)
        x0 = lambda z: sol.v(0.0, np.atleast_1d(z))  # noqa: E731
        traj = solve_ivp(space, spec, sch, x0, f=f)
        return error_norms(traj, spec, sol)

    Ns = [N0 * 2**j for j in range(levels)]
    hs = np.array([1.0 / N for N in Ns])
    taus_h = np.array([spec.T * c_tau * h ** (2.0 / s) for h in hs])
    eh = np.array([run(N, tau) for N, tau in zip(Ns, taus_h)])

    s_h = 2 if spec.n == spec.k else 1
    extra = 0 if s_h == 2 else 3
    N_f = N0 * 2 ** (levels + (3 if s == 1 else 4) + extra) if N_fine is None else N_fine
    tau0 = spec.T / (10 if s == 1 else 5) if tau0 is None else tau0
    taus = np.array([tau0 / 2**j for j in range(levels)])
    et = np.array([run(N_f, tau) for tau in taus])
    return ConvergenceReport(
        scheme=scheme, h=hs, tau_h=taus_h, err_h_l2l2=eh[:, 0], err_h_cl2=eh[:, 1], tau=taus, N_tau=N_f,
        err_tau_l2l2=et[:, 0], err_tau_cl2=et[:, 1],
        order_h=_fit(hs, eh[:, 1]), order_tau=_fit(taus, et[:, 1]),
        order_h_l2l2=_fit(hs, eh[:, 0]), order_tau_l2l2=_fit(taus, et[:, 0]), space_order=s_h,
    )


def form_operator_duality(spec: ProblemSpec, sol: ManufacturedSolution, N: int, t: float = 0.0, q: int = 3) -> float:
    """``sup_{v_h} |a(t, I_h v, v_h) - (A v | v_h)| / |v_h|_V`` on an ``N``-cell mesh."""
    space = build_space(build_mesh(N, q), spec)
    c = interpolate(space, lambda z: sol.v(t, np.atleast_1d(z)))
    K = assemble_stiffness(space, spec, t)
    img = MatrixField.from_callable(lambda tt, z: strong_image(spec, sol, t, z)[..., None], (spec.n, 1),
                                    vectorized=True, time_dependent=False)
    r = K @ c - assemble_load(space, img, t)
    y = spla.spsolve(space.gram_v.tocsc(), r)
    return float(np.sqrt(max(np.real(np.vdot(r, y)), 0.0)))


# ------------------------------------------------------------- random specs
def random_admissible_spec(rng, n: int | None = None, k: int | None = None, r: int | None = None) -> ProblemSpec:
    """Random spec meeting every standing assumption.

    ``S`` and ``H`` are affine in ``zeta`` between two Hermitian positive
    matrices, ``W_R`` is positive semidefinite and ``P1`` has the block form
    ``[[A, B], [C, 0]]`` in the basis ``[G Q]`` (so the coupling condition
    holds), affine in ``zeta``.
    """
    n = int(rng.integers(1, 4)) if n is None else n
    k = int(rng.integers(1, n + 1)) if k is None else k
    r = int(rng.integers(0, 2 * k + 1)) if r is None else r

    def cplx(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    def hpd(m):
        X = cplx(m, m)
        return X @ X.conj().T / m + 0.2 * np.eye(m)

    G = np.linalg.qr(cplx(n, k))[0]
    F = np.linalg.qr(cplx(2 * k, 2 * k))[0][:, :r] if r else np.zeros((2 * k, 0), dtype=complex)
    Qb = orthocomplement_basis(G)
    U = np.hstack([G, Qb])

    def p1_block():
        X = cplx(n, n)
        X[k:, k:] = 0.0
        return U @ X @ U.conj().T / np.sqrt(n)

    S0, S1 = hpd(k), hpd(k)
    H0, H1 = hpd(n), hpd(n)
    Y = cplx(r, r)
    return ProblemSpec(
        n=n, k=k, r=r, G=G, F=F,
        W_R=MatrixField.constant(Y @ Y.conj().T, (r, r), name="W_R"),
        P0=MatrixField.constant(np.zeros((n, n)), name="P0"),
        P1=MatrixField.zeta_polynomial([p1_block(), p1_block()], name="P1"),
        S=MatrixField.zeta_polynomial([S0, S1 - S0], name="S"),
        H=MatrixField.zeta_polynomial([H0, H1 - H0], name="H"),
        name=f"random-n{n}k{k}r{r}",
    )
