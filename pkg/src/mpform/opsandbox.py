"""Finite-dimensional checks of the abstract operator results.

Everything here lives on ``X = C^N`` with bounded matrix families, so the
statements that survive are algebraic identities: sectorial accretivity,
associated operators under changed inner products, the right/left
multiplicative-perturbation transform ``v = B u`` and evolution-family laws.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.integrate as si
import scipy.linalg as sl

from .errors import IntegratorFailure, NotPositive, NotSelfAdjoint, SingularGram

__all__ = [
    "MatrixEvolutionProblem",
    "SectorCheck",
    "SectorBoundReport",
    "AssociatedOperator",
    "WeightedProductReport",
    "RightLeftReport",
    "EvolutionFamilyReport",
    "BDerivativeReport",
    "accretivity_check",
    "sector_bound_check",
    "associated_operator",
    "weighted_product_generator",
    "right_left_equivalence",
    "left_generator",
    "left_family",
    "phi_family",
    "evolution_family_checks",
    "b_derivative_identities",
    "random_problem",
]

Matrix = Callable[[float], np.ndarray]


def _herm(X):
    return 0.5 * (X + X.conj().T)


def _dense(X):
    return X.toarray() if hasattr(X, "toarray") else np.asarray(X)


@dataclass(frozen=True, eq=False)
class MatrixEvolutionProblem:
    """``u' + A(t) B(t) u + C(t) u = f(t)``, ``B(0) u(0) = x0`` on ``C^N``."""

    N: int
    A: Matrix
    B: Matrix
    dB: Matrix
    x0: np.ndarray
    T: float = 1.0
    C: Matrix | None = None
    f: Callable[[float], np.ndarray] | None = None
    b_selfadjoint: bool = False
    name: str = ""

    def forcing(self, t):
        return np.zeros(self.N, dtype=complex) if self.f is None else np.asarray(self.f(t), dtype=complex)

    def validate(self, nt: int = 21) -> dict:
        """Condition numbers of ``B`` on a grid and, if declared, the lower bound ``beta``."""
        grid = np.linspace(0.0, self.T, nt)
        conds, betas = [], []
        for t in grid:
            Bt = np.asarray(self.B(t), dtype=complex)
            s = np.linalg.svd(Bt, compute_uv=False)
            if s[-1] <= 1e-14 * s[0]:
                raise SingularGram(f"B({t}) is singular")
            conds.append(s[0] / s[-1])
            if self.b_selfadjoint:
                if np.linalg.norm(Bt - Bt.conj().T) > 1e-12 * s[0]:
                    raise NotSelfAdjoint(f"B({t}) is not self-adjoint")
                betas.append(np.linalg.eigvalsh(_herm(Bt))[0])
        out = {"max_cond": float(max(conds))}
        if betas:
            out["beta"] = float(min(betas))
            if out["beta"] <= 0:
                raise NotPositive(f"B is not uniformly positive (beta = {out['beta']:.3e})")
        return out


# ----------------------------------------------------------------- accretivity
@dataclass(frozen=True)
class SectorCheck:
    omega: float
    theta: float
    margin: float
    passed: bool
    z_samples: tuple = ()


def _to_euclidean(A, gram):
    # (x|y)_M = y^H M x with M = L L^H; in coordinates x~ = L^H x the operator is L^H A L^{-H}
    A = _dense(A).astype(complex)
    if gram is None:
        return A
    try:
        L = np.linalg.cholesky(_dense(gram).astype(complex))
    except np.linalg.LinAlgError as exc:
        raise SingularGram("gram matrix is not Hermitian positive definite") from exc
    return L.conj().T @ sl.solve_triangular(L.conj(), A.T, lower=True).T


def accretivity_check(A, omega: float, theta: float, gram=None, tol: float = 1e-12) -> SectorCheck:
    """Smallest eigenvalue of ``Herm(e^{+-i theta}(omega + A))``.

    With ``gram`` the inner product is ``(x|y) = y^H gram x`` (e.g. the mass
    matrix when ``A = M^{-1} K``).  Passes iff the margin is at least
    ``-tol * max(1, |omega + A|)``.
    """
    if not 0.0 < theta < 0.5 * np.pi:
        raise ValueError(f"theta must lie in (0, pi/2), got {theta}")
    At = _to_euclidean(A, gram)
    S = omega * np.eye(At.shape[0]) + At
    margin = min(
        float(np.linalg.eigvalsh(_herm(np.exp(sgn * 1j * theta) * S))[0]) for sgn in (1.0, -1.0)
    )
    scale = max(1.0, float(np.linalg.norm(S, 2)))
    return SectorCheck(omega=float(omega), theta=float(theta), margin=margin, passed=margin >= -tol * scale)


@dataclass(frozen=True)
class SectorBoundReport:
    z_samples: np.ndarray
    norms: np.ndarray
    bounds: np.ndarray
    worst_ratio: float
    passed: bool


def _default_samples(theta):
    r = np.array([1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0])
    phis = np.array([-1.0, -0.5, 0.0, 0.5, 1.0]) * theta
    return (r[:, None] * np.exp(1j * phis[None, :])).ravel()


def sector_bound_check(A, omega: float, theta: float, z_samples=None, gram=None) -> SectorBoundReport:
    """``|exp(-z A)| <= exp(omega |z|)`` for ``z`` in the closed sector of angle ``theta``."""
    z = _default_samples(theta) if z_samples is None else np.atleast_1d(np.asarray(z_samples, dtype=complex))
    if np.any(np.abs(np.angle(z[z != 0])) > theta + 1e-12):
        raise ValueError("z_samples must lie in the sector |arg z| <= theta")
    At = _to_euclidean(A, gram)
    nrm = np.array([np.linalg.svd(sl.expm(-zz * At), compute_uv=False)[0] for zz in z])
    bnd = np.exp(omega * np.abs(z))
    ratio = nrm / bnd
    return SectorBoundReport(z_samples=z, norms=nrm, bounds=bnd, worst_ratio=float(ratio.max()),
                             passed=bool(np.all(nrm <= bnd * (1.0 + 1e-8))))


# ---------------------------------------------------------- associated operator
@dataclass(frozen=True, eq=False)
class AssociatedOperator:
    A: np.ndarray
    defect: float

    @property
    def passed(self) -> bool:
        return self.defect <= 1e-12


def _check_gram(M):
    M = _dense(M).astype(complex)
    nrm = np.linalg.norm(M, 2)
    if np.linalg.norm(M - M.conj().T) > 1e-12 * max(nrm, 1.0):
        raise SingularGram("gram matrix is not Hermitian")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise SingularGram("gram matrix is not positive definite") from exc
    return M


def _pair_defect(lhs, rhs, rng, n, trials=8):
    # relative defect of two sesquilinear forms (u, v) -> v^H X u on random vectors
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a, b = lhs(u, v), rhs(u, v)
        worst = max(worst, abs(a - b) / max(abs(b), np.linalg.norm(u) * np.linalg.norm(v), 1e-300))
    return worst


def associated_operator(K, M_H, rng=None) -> AssociatedOperator:
    """``A = M_H^{-1} K`` so that ``(A u | v)_{M_H} = v^H K u``."""
    K = _dense(K).astype(complex)
    M = _check_gram(np.atleast_2d(M_H))
    K = np.atleast_2d(K)
    A = np.linalg.solve(M, K)
    rng = np.random.default_rng(0) if rng is None else rng
    kn = max(np.linalg.norm(K, 2), 1e-300)
    defect = _pair_defect(lambda u, v: np.vdot(v, M @ (A @ u)) / kn, lambda u, v: np.vdot(v, K @ u) / kn, rng, K.shape[0])
    return AssociatedOperator(A=A, defect=float(defect))


@dataclass(frozen=True)
class WeightedProductReport:
    form_defect: float
    similarity_defect: float
    gram_min_eig: float
    passed: bool


def weighted_product_generator(A, Bmat, M_H=None, rng=None, tol: float = 1e-12) -> WeightedProductReport:
    """``BA`` is associated with the form of ``A`` under ``(x|y)_B = (B^{-1} x | y)_{M_H}``.

    Checks ``(B^{-1}(BA)u | v)_{M_H} = (A u | v)_{M_H}`` with the weighted Gram
    ``M_H B^{-1}`` and the similarity ``AB = B^{-1}(BA)B``.  ``B`` must be
    self-adjoint and positive with respect to ``M_H``.
    """
    A = np.atleast_2d(_dense(A)).astype(complex)
    B = np.atleast_2d(_dense(Bmat)).astype(complex)
    n = A.shape[0]
    M = np.eye(n, dtype=complex) if M_H is None else _check_gram(M_H)
    MB = M @ B
    bn = np.linalg.norm(MB, 2)
    if np.linalg.norm(MB - MB.conj().T) > 1e-12 * max(bn, 1.0):
        raise NotSelfAdjoint("B is not self-adjoint in the given inner product")
    if np.linalg.eigvalsh(_herm(MB))[0] <= 0:
        raise NotPositive("B is not positive definite")
    K = M @ A
    gram_B = M @ np.linalg.inv(B)
    gram_B = _herm(gram_B)
    rng = np.random.default_rng(0) if rng is None else rng
    BA = B @ A
    kn = max(np.linalg.norm(K, 2), 1e-300)
    form = _pair_defect(lambda u, v: np.vdot(v, gram_B @ (BA @ u)) / kn, lambda u, v: np.vdot(v, K @ u) / kn, rng, n)
    AB = A @ B
    sim = np.linalg.norm(AB - np.linalg.solve(B, BA @ B)) / max(np.linalg.norm(AB), 1e-300)
    gmin = float(np.linalg.eigvalsh(gram_B)[0])
    cond = np.linalg.cond(B)
    ok = form <= tol * cond * n and sim <= tol * cond * n and gmin > 0
    return WeightedProductReport(form_defect=float(form), similarity_defect=float(sim), gram_min_eig=gmin, passed=bool(ok))


# ---------------------------------------------------------- right/left transform
def left_generator(prob: MatrixEvolutionProblem, t: float) -> np.ndarray:
    """``L(t) = B A - B' B^{-1} + B C B^{-1}`` of the left problem ``v' + L v = B f``."""
    A, B, dB = (np.asarray(g(t), dtype=complex) for g in (prob.A, prob.B, prob.dB))
    Binv = np.linalg.inv(B)
    L = B @ A - dB @ Binv
    if prob.C is not None:
        L = L + B @ np.asarray(prob.C(t), dtype=complex) @ Binv
    return L


def _right_generator(prob, t):
    A, B = np.asarray(prob.A(t), dtype=complex), np.asarray(prob.B(t), dtype=complex)
    R = A @ B
    if prob.C is not None:
        R = R + np.asarray(prob.C(t), dtype=complex)
    return R


def _integrate(rhs, y0, t_span, t_eval=None, method="RK45", rtol=1e-10, atol=1e-12, dense=False):
    sol = si.solve_ivp(rhs, t_span, np.asarray(y0, dtype=complex), method=method, t_eval=t_eval,
                       rtol=rtol, atol=atol, dense_output=dense)
    if not sol.success:
        raise IntegratorFailure(sol.message)
    return sol


@dataclass(frozen=True, eq=False)
class RightLeftReport:
    times: np.ndarray
    gap: float
    initial_defect: float
    passed: bool
    u: np.ndarray = field(repr=False, default=None)
    v: np.ndarray = field(repr=False, default=None)


def right_left_equivalence(prob: MatrixEvolutionProblem, tol: float = 1e-6, rtol: float | None = None,
                           n_eval: int = 101) -> RightLeftReport:
    """Integrate the right and the left problem independently and compare ``u`` with ``B^{-1} v``."""
    rtol = min(1e-10, tol / 10) if rtol is None else rtol
    atol = rtol * 1e-2
    times = np.linspace(0.0, prob.T, n_eval)
    x0 = np.asarray(prob.x0, dtype=complex)
    u0 = np.linalg.solve(np.asarray(prob.B(0.0), dtype=complex), x0)

    def right(t, u):
        return prob.forcing(t) - _right_generator(prob, t) @ u

    def left(t, v):
        return np.asarray(prob.B(t), dtype=complex) @ prob.forcing(t) - left_generator(prob, t) @ v

    u = _integrate(right, u0, (0.0, prob.T), times, rtol=rtol, atol=atol).y.T
    v = _integrate(left, x0, (0.0, prob.T), times, rtol=rtol, atol=atol).y.T
    rec = np.array([np.linalg.solve(np.asarray(prob.B(t), dtype=complex), vv) for t, vv in zip(times, v)])
    gap = float(np.max(np.linalg.norm(u - rec, axis=1)))
    init = float(np.linalg.norm(np.asarray(prob.B(0.0), dtype=complex) @ u[0] - x0))
    return RightLeftReport(times=times, gap=gap, initial_defect=init, passed=gap <= tol, u=u, v=v)


# -------------------------------------------------------------- evolution family
_FAM = dict(method="DOP853", rtol=1e-12, atol=1e-14)


def left_family(prob: MatrixEvolutionProblem, grid) -> np.ndarray:
    """``V[j, i] = V(t_j, t_i)`` for ``j >= i`` (zeros below), solving ``d/dt V = -L(t) V``."""
    grid = np.asarray(grid, dtype=float)
    n, N = grid.size, prob.N
    V = np.zeros((n, n, N, N), dtype=complex)
    eye = np.eye(N, dtype=complex)
    for i, s in enumerate(grid):
        V[i, i] = eye
        if i == n - 1:
            continue

        def rhs(t, y):
            return -(left_generator(prob, t) @ y.reshape(N, N)).ravel()

        sol = _integrate(rhs, eye.ravel(), (s, grid[-1]), grid[i:], **_FAM)
        for jj, j in enumerate(range(i, n)):
            V[j, i] = sol.y[:, jj].reshape(N, N)
    return V


def phi_family(prob: MatrixEvolutionProblem, grid, V=None) -> np.ndarray:
    """``Phi(t, s) = B(t)^{-1} V(t, s) B(s)``."""
    grid = np.asarray(grid, dtype=float)
    V = left_family(prob, grid) if V is None else V
    Bs = [np.asarray(prob.B(t), dtype=complex) for t in grid]
    Binv = [np.linalg.inv(b) for b in Bs]
    P = np.zeros_like(V)
    for j in range(grid.size):
        for i in range(j + 1):
            P[j, i] = Binv[j] @ V[j, i] @ Bs[i]
    return P


def _cocycle_defect(F):
    n = F.shape[0]
    worst = 0.0
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                d = np.linalg.norm(F[k, i] - F[k, j] @ F[j, i], 2) / max(1.0, np.linalg.norm(F[k, i], 2))
                worst = max(worst, d)
    return worst


@dataclass(frozen=True)
class EvolutionFamilyReport:
    cocycle_V: float
    cocycle_Phi: float
    identity_Phi: float
    duhamel_gap: float
    passed: bool


def _duhamel_at(prob, t, n_sub=16, n_gauss=8):
    """``Phi(t, 0) u0 + int_0^t Phi(t, r) f(r) dr`` via the adjoint equation in ``r``."""
    N = prob.N
    eye = np.eye(N, dtype=complex)

    def rhs(r, y):
        return (y.reshape(N, N) @ left_generator(prob, r)).ravel()

    sol = _integrate(rhs, eye.ravel(), (t, 0.0), dense=True, **_FAM)
    Vt = lambda r: sol.sol(r).reshape(N, N)  # noqa: E731  V(t, r)
    Bt_inv = np.linalg.inv(np.asarray(prob.B(t), dtype=complex))
    x0 = np.asarray(prob.x0, dtype=complex)
    out = Bt_inv @ Vt(0.0) @ x0  # Phi(t,0) u0 with u0 = B(0)^{-1} x0
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    edges = np.linspace(0.0, t, n_sub + 1)
    acc = np.zeros(N, dtype=complex)
    for a, b in zip(edges[:-1], edges[1:]):
        for xx, ww in zip(xg, wg):
            r = 0.5 * (a + b) + 0.5 * (b - a) * xx
            acc += 0.5 * (b - a) * ww * (Vt(r) @ (np.asarray(prob.B(r), dtype=complex) @ prob.forcing(r)))
    return out + Bt_inv @ acc


def evolution_family_checks(prob: MatrixEvolutionProblem, grid=None, cocycle_tol=1e-8, duhamel_tol=1e-6) -> EvolutionFamilyReport:
    grid = np.linspace(0.0, prob.T, 6) if grid is None else np.asarray(grid, dtype=float)
    V = left_family(prob, grid)
    P = phi_family(prob, grid, V)
    cV, cP = _cocycle_defect(V), _cocycle_defect(P)
    ident = max(np.linalg.norm(P[i, i] - np.eye(prob.N), 2) for i in range(grid.size))
    t_check = grid[1:]
    direct = right_left_equivalence(prob, tol=np.inf, rtol=1e-12, n_eval=2)
    u0 = direct.u[0]

    def right(t, u):
        return prob.forcing(t) - _right_generator(prob, t) @ u

    ref = _integrate(right, u0, (0.0, prob.T), t_check, **_FAM).y.T
    gap = max(np.linalg.norm(_duhamel_at(prob, t) - ref[m]) for m, t in enumerate(t_check))
    ok = cV <= cocycle_tol and cP <= cocycle_tol and ident <= cocycle_tol and gap <= duhamel_tol
    return EvolutionFamilyReport(cocycle_V=float(cV), cocycle_Phi=float(cP), identity_Phi=float(ident),
                                 duhamel_gap=float(gap), passed=bool(ok))


# -------------------------------------------------------- derivative of B^{-1}
@dataclass(frozen=True)
class BDerivativeReport:
    max_error: float
    error_half_step: float
    observed_order: float
    opposite_sign_error: float
    passed: bool


def b_derivative_identities(B: Matrix, dB: Matrix, T: float = 1.0, rng=None, delta: float = 1e-3,
                            n_samples: int = 5) -> BDerivativeReport:
    """Central differences of ``t -> B(t)^{-1} x`` against ``-B^{-1} B' B^{-1} x``.

    The error at ``delta`` and ``delta/2`` gives the observed order (2 for a
    smooth ``B``).  ``opposite_sign_error`` measures the identity with a plus
    sign, which fails unless ``B' = 0``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    ts = np.linspace(delta, T - delta, n_samples)
    n = np.atleast_2d(B(0.0)).shape[0]

    def err(d):
        e, e_plus = 0.0, 0.0
        for t in ts:
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            fd = (np.linalg.solve(np.atleast_2d(B(t + d)), x) - np.linalg.solve(np.atleast_2d(B(t - d)), x)) / (2 * d)
            Bi = np.linalg.inv(np.atleast_2d(B(t)))
            exact = -Bi @ np.atleast_2d(dB(t)) @ Bi @ x
            scale = max(1.0, np.linalg.norm(exact))
            e = max(e, np.linalg.norm(fd - exact) / scale)
            e_plus = max(e_plus, np.linalg.norm(fd + exact) / scale)
        return e, e_plus

    state = rng.bit_generator.state
    e1, ep = err(delta)
    rng.bit_generator.state = state
    e2, _ = err(0.5 * delta)
    order = float(np.log2(e1 / e2)) if e1 > 1e-13 and e2 > 1e-13 else float("nan")
    ok = e1 <= 10.0 * delta**2 * max(1.0, n) or e1 <= 1e-10
    return BDerivativeReport(max_error=float(e1), error_half_step=float(e2), observed_order=order,
                             opposite_sign_error=float(ep), passed=bool(ok))


# --------------------------------------------------------------- random family
def random_problem(rng, N: int = 8, with_C: bool = True, T: float = 1.0) -> MatrixEvolutionProblem:
    """Smooth random instance with ``B(t) = I + 0.3 sin(t) Hs`` (``|Hs| = 1``)."""
    def cplx(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    X = cplx(N, N)
    A0 = X @ X.conj().T / N + 0.5 * (cplx(N, N) - cplx(N, N).conj().T) / np.sqrt(N)
    A1 = cplx(N, N) / np.sqrt(N)
    Hs = _herm(cplx(N, N))
    Hs = Hs / np.linalg.norm(Hs, 2)
    C0 = cplx(N, N) / np.sqrt(N)
    fa, fb, x0 = cplx(N), cplx(N), cplx(N)
    eye = np.eye(N)
    return MatrixEvolutionProblem(
        N=N,
        A=lambda t: A0 + np.sin(t) * A1,
        B=lambda t: eye + 0.3 * np.sin(t) * Hs,
        dB=lambda t: 0.3 * np.cos(t) * Hs,
        C=(lambda t: np.cos(t) * C0) if with_C else None,
        f=lambda t: fa * np.cos(t) + fb,
        x0=x0,
        T=T,
        b_selfadjoint=True,
        name=f"random-N{N}{'-C' if with_C else ''}",
    )
