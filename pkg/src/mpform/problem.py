"""Coefficient data of the parabolic system and checks of its standing assumptions.

All matrices are stored as ``complex128``; real input is embedded.  Inner
products are linear in the first slot and antilinear in the second,
``(x | y) = y^H x``, everywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AssumptionViolation,
    MissingDerivative,
    NonCoercive,
    NonFiniteCoefficient,
    RankDeficient,
    ShapeMismatch,
)

__all__ = [
    "MatrixField",
    "ProblemSpec",
    "ValidationReport",
    "EllipticityEstimate",
    "validate_spec",
    "orthocomplement_basis",
    "reduced_p1_fields",
    "ellipticity_constants",
    "spectral_norms",
]

ORTHO_TOL = 1e-12
FD_STEP = 1e-6

FieldFunc = Callable[[float, np.ndarray], np.ndarray]


def spectral_norms(mats: np.ndarray) -> np.ndarray:
    """2-norms of a stack of matrices, shape ``(..., r, c) -> (...)``."""
    mats = np.asarray(mats)
    if mats.shape[-1] == 0 or mats.shape[-2] == 0:
        return np.zeros(mats.shape[:-2])
    return np.linalg.norm(mats, ord=2, axis=(-2, -1))


def _fd_dzeta(func, t, zeta, delta):
    # central stencil inside (0, 1), second-order one-sided stencils at the ends
    z = np.asarray(zeta, dtype=float)
    lo = z - delta < 0.0
    hi = z + delta > 1.0
    mid = ~(lo | hi)
    out = np.empty((z.size,) + func(t, z[:1]).shape[1:], dtype=complex)
    if mid.any():
        zm = z[mid]
        out[mid] = (func(t, zm + delta) - func(t, zm - delta)) / (2 * delta)
    if lo.any():
        zl = z[lo]
        out[lo] = (-3 * func(t, zl) + 4 * func(t, zl + delta) - func(t, zl + 2 * delta)) / (2 * delta)
    if hi.any():
        zh = z[hi]
        out[hi] = (3 * func(t, zh) - 4 * func(t, zh - delta) + func(t, zh - 2 * delta)) / (2 * delta)
    return out


@dataclass(frozen=True, eq=False)
class MatrixField:
    """A matrix-valued coefficient ``(t, zeta) -> K^{rows x cols}``.

    ``func`` is vectorized in ``zeta``: it receives a float ``t`` and a 1-d
    array of positions and returns an array of shape ``(m, rows, cols)``
    (a single ``(rows, cols)`` matrix is broadcast).  ``dzeta`` has the same
    contract and returns the spatial derivative.
    """

    shape: tuple[int, int]
    func: FieldFunc
    dzeta: FieldFunc | None = None
    t_breakpoints: tuple[float, ...] = ()
    time_dependent: bool = True
    zeta_dependent: bool = True
    name: str = ""

    @property
    def has_zeta_derivative(self) -> bool:
        return self.dzeta is not None or not self.zeta_dependent

    def _call(self, fn, t, zeta, what):
        z = np.asarray(zeta, dtype=float)
        scalar = z.ndim == 0
        zz = np.atleast_1d(z).ravel()
        out = np.asarray(fn(float(t), zz), dtype=complex)
        if out.shape == self.shape:
            out = np.broadcast_to(out, (zz.size,) + self.shape)
        if out.shape != (zz.size,) + tuple(self.shape):
            raise ShapeMismatch(
                f"{self.name or 'field'} {what} returned shape {out.shape[-2:]}, "
                f"declared {tuple(self.shape)}"
            )
        if not np.all(np.isfinite(out)):
            raise NonFiniteCoefficient(f"{self.name or 'field'} {what} is non-finite at t={t}")
        return out[0] if scalar else out

    def eval(self, t: float, zeta) -> np.ndarray:
        return self._call(self.func, t, zeta, "value")

    __call__ = eval

    def eval_dzeta(self, t: float, zeta, allow_fd: bool = True, delta: float = FD_STEP) -> np.ndarray:
        """Spatial derivative; finite differences only when no evaluator exists."""
        if self.dzeta is not None:
            return self._call(self.dzeta, t, zeta, "zeta-derivative")
        if not self.zeta_dependent:
            z = np.asarray(zeta, dtype=float)
            return np.zeros(z.shape + tuple(self.shape), dtype=complex)
        if not allow_fd:
            raise MissingDerivative(f"{self.name or 'field'} has no zeta-derivative evaluator")
        z = np.asarray(zeta, dtype=float)
        out = _fd_dzeta(lambda tt, zz: self._call(self.func, tt, zz, "value"), t, np.atleast_1d(z).ravel(), delta)
        return out[0] if z.ndim == 0 else out

    # ------------------------------------------------------------------ builders
    @classmethod
    def constant(cls, value, shape: tuple[int, int] | None = None, name: str = "") -> "MatrixField":
        mat = np.atleast_2d(np.asarray(value, dtype=complex))
        if shape is not None:
            if mat.size == 0:
                mat = np.zeros(shape, dtype=complex)
            elif mat.shape != tuple(shape):
                raise ShapeMismatch(f"constant of shape {mat.shape} declared as {shape}")
        mat = mat.copy()
        mat.setflags(write=False)
        zero = np.zeros_like(mat)
        return cls(
            shape=tuple(mat.shape),
            func=lambda t, z: mat,
            dzeta=lambda t, z: zero,
            time_dependent=False,
            zeta_dependent=False,
            name=name,
        )

    @classmethod
    def from_callable(
        cls,
        fn: Callable,
        shape: tuple[int, int],
        *,
        vectorized: bool = False,
        dzeta: Callable | None = None,
        time_dependent: bool = True,
        zeta_dependent: bool = True,
        t_breakpoints: Sequence[float] = (),
        name: str = "",
    ) -> "MatrixField":
        """Wrap a user function ``fn(t, zeta)``; scalar-``zeta`` functions are looped."""

        def one(f, t, zi):
            out = np.asarray(f(t, zi), dtype=complex)
            if out.size != shape[0] * shape[1]:
                raise ShapeMismatch(f"{name or 'field'} returned shape {out.shape}, declared {tuple(shape)}")
            return out.reshape(shape)

        def vec(f):
            if f is None or vectorized:
                return f
            return lambda t, z: np.stack([one(f, t, zi) for zi in z])

        return cls(
            shape=tuple(shape),
            func=vec(fn),
            dzeta=vec(dzeta),
            t_breakpoints=tuple(t_breakpoints),
            time_dependent=time_dependent,
            zeta_dependent=zeta_dependent,
            name=name,
        )

    @classmethod
    def zeta_polynomial(cls, coeffs: Sequence, name: str = "") -> "MatrixField":
        """``sum_j coeffs[j] * zeta**j`` with an exact derivative."""
        cs = [np.atleast_2d(np.asarray(c, dtype=complex)) for c in coeffs]
        shape = cs[0].shape
        if any(c.shape != shape for c in cs):
            raise ShapeMismatch("polynomial coefficients differ in shape")
        stack = np.stack(cs)
        powers = np.arange(len(cs))

        def value(t, z):
            return np.einsum("mj,jrc->mrc", z[:, None] ** powers[None, :], stack)

        def deriv(t, z):
            if len(cs) == 1:
                return np.zeros((z.size,) + shape, dtype=complex)
            zp = powers[1:] * z[:, None] ** (powers[1:] - 1)[None, :]
            return np.einsum("mj,jrc->mrc", zp, stack[1:])

        return cls(shape=shape, func=value, dzeta=deriv, time_dependent=False,
                   zeta_dependent=len(cs) > 1, name=name)

    @classmethod
    def piecewise_t(cls, breakpoints: Sequence[float], pieces: Sequence[Sequence], name: str = "") -> "MatrixField":
        """Piecewise polynomial in time, constant in space.

        On segment ``[b_i, b_{i+1})`` the value is ``sum_j pieces[i][j] (t - b_i)**j``;
        the last segment is closed and extends the final polynomial beyond it.
        """
        bps = np.asarray(breakpoints, dtype=float)
        if bps.ndim != 1 or bps.size != len(pieces) + 1 or np.any(np.diff(bps) <= 0):
            raise ShapeMismatch("need len(pieces)+1 strictly increasing breakpoints")
        polys = [[np.atleast_2d(np.asarray(c, dtype=complex)) for c in piece] for piece in pieces]
        shape = polys[0][0].shape
        if any(c.shape != shape for p in polys for c in p):
            raise ShapeMismatch("piece coefficients differ in shape")

        def value(t, z):
            i = int(np.clip(np.searchsorted(bps, t, side="right") - 1, 0, len(polys) - 1))
            s = t - bps[i]
            return sum(c * s**j for j, c in enumerate(polys[i]))

        zero = np.zeros(shape, dtype=complex)
        return cls(shape=shape, func=value, dzeta=lambda t, z: zero,
                   t_breakpoints=tuple(bps[1:-1]), time_dependent=True,
                   zeta_dependent=False, name=name)

    @classmethod
    def table(cls, t_knots: Sequence[float], values: Sequence, name: str = "") -> "MatrixField":
        """Piecewise-linear interpolation of a time table (every knot is a breakpoint)."""
        ts = [float(x) for x in t_knots]
        vs = [np.atleast_2d(np.asarray(v, dtype=complex)) for v in values]
        if len(ts) != len(vs) or len(ts) < 2:
            raise ShapeMismatch("table needs matching t and values lists of length >= 2")
        pieces = [[vs[i], (vs[i + 1] - vs[i]) / (ts[i + 1] - ts[i])] for i in range(len(ts) - 1)]
        return cls.piecewise_t(ts, pieces, name=name)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Coefficient tuple of one instance of the boundary-controlled parabolic system."""

    n: int
    k: int
    r: int
    G: np.ndarray
    F: np.ndarray
    W_R: MatrixField
    P0: MatrixField
    P1: MatrixField
    S: MatrixField
    H: MatrixField
    T: float = 1.0
    f: MatrixField | None = None
    name: str = ""

    def __post_init__(self):
        n, k, r = self.n, self.k, self.r
        if not (1 <= k <= n) or not (0 <= r <= 2 * k):
            raise ShapeMismatch(f"dimensions need 1 <= k <= n and 0 <= r <= 2k, got n={n}, k={k}, r={r}")
        G = np.asarray(self.G, dtype=complex).reshape(n, k) if np.size(self.G) == n * k else None
        F = np.asarray(self.F, dtype=complex)
        if r == 0:
            F = np.zeros((2 * k, 0), dtype=complex)
        if G is None:
            raise ShapeMismatch(f"G must be {n}x{k}")
        if F.shape != (2 * k, r):
            raise ShapeMismatch(f"F must be {2 * k}x{r}, got {F.shape}")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "F", F)
        expected = {"W_R": (r, r), "P0": (n, n), "P1": (n, n), "S": (k, k), "H": (n, n)}
        for key, shp in expected.items():
            fld = getattr(self, key)
            if tuple(fld.shape) != shp:
                raise ShapeMismatch(f"{key} declared {tuple(fld.shape)}, expected {shp}")
        if self.f is not None and tuple(self.f.shape) != (n, 1):
            raise ShapeMismatch(f"f declared {tuple(self.f.shape)}, expected {(n, 1)}")
        if not self.T > 0:
            raise ShapeMismatch("horizon T must be positive")

    @property
    def autonomous(self) -> bool:
        return not (self.S.time_dependent or self.H.time_dependent or self.W_R.time_dependent)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        pts = set()
        for fld in (self.S, self.H, self.W_R, self.f):
            if fld is not None:
                pts.update(float(b) for b in fld.t_breakpoints if 0.0 < b < self.T)
        return tuple(sorted(pts))

    def forcing(self) -> MatrixField:
        return self.f if self.f is not None else MatrixField.constant(np.zeros((self.n, 1)), name="f")


@dataclass(frozen=True)
class ValidationReport:
    passed: dict
    first_failure: str | None
    m1: float
    M1: float
    m2: float
    M2: float
    L1: float
    L2: float
    kappa1: float
    kappa2: float
    p1_sup: float
    p0_sup: float
    p1_derivative_fd: bool
    sample_grid: tuple
    messages: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.first_failure is None

    def raise_if_failed(self) -> None:
        if self.first_failure is not None:
            raise AssumptionViolation(f"{self.first_failure}: {self.messages.get(self.first_failure, '')}")


@dataclass(frozen=True)
class EllipticityEstimate:
    epsilon: float
    omega: float
    alpha: float
    kappa_tilde: float


def orthocomplement_basis(G) -> np.ndarray:
    """Orthonormal basis ``Q`` of ``range(G)^perp`` (``n x (n-k)``)."""
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    n, k = G.shape
    if np.linalg.norm(G.conj().T @ G - np.eye(k)) > ORTHO_TOL * max(1, k):
        raise RankDeficient("G does not have orthonormal columns (G*G != I)")
    if k == n:
        return np.zeros((n, 0), dtype=complex)
    U, _, _ = np.linalg.svd(G, full_matrices=True)
    Q = U[:, k:]
    # one sweep of re-orthogonalisation against G keeps G*Q at roundoff
    Q = Q - G @ (G.conj().T @ Q)
    Q, _ = np.linalg.qr(Q)
    # canonical phase: the largest entry of each column is real positive
    piv = Q[np.argmax(np.abs(Q), axis=0), np.arange(Q.shape[1])]
    return Q * (np.abs(piv) / piv)[None, :]


def _projector_defects(X):
    k = X.shape[1]
    P = X @ X.conj().T
    gram = np.linalg.norm(X.conj().T @ X - np.eye(k)) if k else 0.0
    idem = np.linalg.norm(P @ P - P)
    return gram, idem


def reduced_p1_fields(spec: ProblemSpec, allow_fd: bool = True) -> tuple[MatrixField, MatrixField]:
    """Fields ``R_G = (I - GG*) P1 G`` and its spatial derivative (``n x k``).

    Under the coupling condition ``(I - GG*) P1 v = R_G (G* v)``.
    """
    G = spec.G
    proj = np.eye(spec.n) - G @ G.conj().T
    if not spec.P1.has_zeta_derivative and not allow_fd:
        raise MissingDerivative("P1 has no zeta-derivative evaluator and finite differences are disabled")

    def value(t, z):
        return proj @ spec.P1.eval(0.0, z) @ G

    def deriv(t, z):
        return proj @ spec.P1.eval_dzeta(0.0, z, allow_fd=allow_fd) @ G

    dep = spec.P1.zeta_dependent
    R = MatrixField((spec.n, spec.k), value, dzeta=deriv, time_dependent=False, zeta_dependent=dep, name="R_G")
    dR = MatrixField((spec.n, spec.k), deriv, dzeta=None, time_dependent=False, zeta_dependent=dep, name="dR_G")
    return R, dR


def _segments(T, breakpoints, t_grid):
    edges = [0.0] + [b for b in breakpoints if 0 < b < T] + [T]
    nudge = 1e-9 * T
    segs = []
    for a, b in zip(edges[:-1], edges[1:]):
        inner = [t for t in t_grid if a < t < b]
        segs.append(np.array([a + nudge] + inner + [b - nudge]))
    return segs


def _lipschitz(fld: MatrixField, T, z_grid, t_grid):
    if not fld.time_dependent:
        return 0.0
    best = 0.0
    for seg in _segments(T, fld.t_breakpoints, t_grid):
        vals = np.stack([fld.eval(t, z_grid) for t in seg])
        dt = np.diff(seg)
        diffs = spectral_norms(np.diff(vals, axis=0)).max(axis=1) / dt
        best = max(best, float(diffs.max()))
    return best


def _hermitian_bounds(fld, t_grid, z_grid):
    vals = np.stack([fld.eval(t, z_grid) for t in t_grid])
    scale = max(1.0, float(spectral_norms(vals).max()))
    skew = float(spectral_norms(vals - np.conj(np.swapaxes(vals, -1, -2))).max())
    herm = 0.5 * (vals + np.conj(np.swapaxes(vals, -1, -2)))
    eig = np.linalg.eigvalsh(herm)
    return skew <= ORTHO_TOL * scale, float(eig[..., 0].min()), float(eig[..., -1].max())


def validate_spec(spec: ProblemSpec, nt: int = 33, nz: int = 33) -> ValidationReport:
    """Check the standing assumptions on a tensor grid and collect the constants.

    Items are checked in the order G, P0, coupling, H, S, F, W_R; the first
    violated item is reported as ``first_failure``.  All constants are max/min
    values over the reported sample grid.
    """
    if nt < 2 or nz < 2:
        raise ValueError("nt and nz must be at least 2")
    t_grid = np.linspace(0.0, spec.T, nt)
    z_grid = np.linspace(0.0, 1.0, nz)
    n = spec.n
    G, F = spec.G, spec.F
    passed: dict[str, bool] = {}
    msgs: dict[str, str] = {}

    gram, idem = _projector_defects(G)
    passed["G"] = gram <= ORTHO_TOL and idem <= ORTHO_TOL
    msgs["G"] = f"|G*G - I| = {gram:.3e}, |(GG*)^2 - GG*| = {idem:.3e}"

    P0 = spec.P0.eval(0.0, z_grid)
    p0_sup = float(spectral_norms(P0).max())
    passed["P0"] = True
    msgs["P0"] = f"sup |P0| = {p0_sup:.6g}"

    P1 = spec.P1.eval(0.0, z_grid)
    p1_sup = float(spectral_norms(P1).max())
    proj = np.eye(n) - G @ G.conj().T
    defect = float(spectral_norms(proj @ P1 @ proj).max())
    passed["coupling"] = defect <= ORTHO_TOL * max(1.0, p1_sup)
    msgs["coupling"] = f"sup |(I-GG*)P1(I-GG*)| = {defect:.3e}"

    herm_H, m1, M1 = _hermitian_bounds(spec.H, t_grid, z_grid)
    passed["H"] = herm_H and m1 > 0
    msgs["H"] = f"self-adjoint={herm_H}, spectrum in [{m1:.6g}, {M1:.6g}]"

    herm_S, m2, M2 = _hermitian_bounds(spec.S, t_grid, z_grid)
    passed["S"] = herm_S and m2 > 0
    msgs["S"] = f"self-adjoint={herm_S}, spectrum in [{m2:.6g}, {M2:.6g}]"

    gram, idem = _projector_defects(F)
    passed["F"] = gram <= ORTHO_TOL and idem <= ORTHO_TOL
    msgs["F"] = f"|F*F - I| = {gram:.3e}, |(FF*)^2 - FF*| = {idem:.3e}"

    if spec.r:
        W = np.stack([spec.W_R.eval(t, 0.0) for t in t_grid])
        wscale = max(1.0, float(spectral_norms(W).max()))
        wskew = float(spectral_norms(W - np.conj(np.swapaxes(W, -1, -2))).max())
        wmin = float(np.linalg.eigvalsh(0.5 * (W + np.conj(np.swapaxes(W, -1, -2))))[:, 0].min())
        passed["W_R"] = wskew <= ORTHO_TOL * wscale and wmin >= -ORTHO_TOL * wscale
        msgs["W_R"] = f"skew defect {wskew:.3e}, min eigenvalue {wmin:.6g}"
    else:
        passed["W_R"] = True
        msgs["W_R"] = "r = 0, no boundary weight"

    first = next((key for key, ok in passed.items() if not ok), None)

    R, dR = reduced_p1_fields(spec)
    rho = float(spectral_norms(R.eval(0.0, z_grid)).max())
    delta = float(spectral_norms(dR.eval(0.0, z_grid)).max())
    # |R w|^2 + |(R w)'|^2 <= |[[rho, 0], [delta, rho]] (|v|, |w'|)|^2
    kappa2 = float(np.linalg.norm(np.array([[rho, 0.0], [delta, rho]]), 2))

    return ValidationReport(
        passed=passed,
        first_failure=first,
        m1=m1,
        M1=M1,
        m2=m2,
        M2=M2,
        L1=_lipschitz(spec.H, spec.T, z_grid, t_grid),
        L2=_lipschitz(spec.S, spec.T, z_grid, t_grid),
        kappa1=rho,
        kappa2=kappa2,
        p1_sup=p1_sup,
        p0_sup=p0_sup,
        p1_derivative_fd=spec.P1.zeta_dependent and spec.P1.dzeta is None,
        sample_grid=(t_grid, z_grid),
        messages=msgs,
    )


def ellipticity_constants(
    report: ValidationReport,
    p1_sup: float | None = None,
    g_norm: float = 1.0,
    epsilon: float | None = None,
    p0_sup: float = 0.0,
) -> EllipticityEstimate:
    """Shift ``omega`` and coercivity ``alpha`` of the Garding inequality.

    ``omega = 1 + eps/2 * kt**2 + kappa2`` with ``kt = |P1|_inf |G| + kappa2``
    and ``alpha = min(1, m2 - 1/eps)``.  A non-zero ``p0_sup`` is added to
    ``omega`` (the zeroth-order term is bounded by it).  ``epsilon`` defaults
    to ``2 / m2``.
    """
    m2 = report.m2
    if p1_sup is None:
        p1_sup = report.p1_sup
    if epsilon is None:
        epsilon = 2.0 / m2
    if not m2 - 1.0 / epsilon > 0:
        raise NonCoercive(f"epsilon={epsilon} gives m2 - 1/epsilon = {m2 - 1.0 / epsilon:.3g} <= 0")
    kt = p1_sup * g_norm + report.kappa2
    omega = 1.0 + 0.5 * epsilon * kt**2 + report.kappa2 + p0_sup
    alpha = min(1.0, m2 - 1.0 / epsilon)
    return EllipticityEstimate(epsilon=epsilon, omega=omega, alpha=alpha, kappa_tilde=kt)
