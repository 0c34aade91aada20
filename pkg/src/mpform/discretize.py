"""Mixed Galerkin space on the unit interval and assembly of mass, stiffness, load.

The trial space splits ``v = G w + Q z``: ``w = G* v`` is continuous piecewise
linear (it must lie in ``H^1``), ``z = Q* v`` is piecewise constant.  Full
degrees of freedom are interleaved node by node (``w`` at node ``i`` then ``z``
on cell ``i``) so that every element matrix couples at most three blocks.
The essential boundary condition ``(I - FF*)[w(1); w(0)] = 0`` is eliminated
by the parameterisation ``[w(1); w(0)] = F y``; the ``r`` coordinates ``y``
come first in the reduced ordering.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConstraintInconsistent, InvalidSize, SingularWeight
from .problem import ORTHO_TOL, MatrixField, ProblemSpec, orthocomplement_basis, reduced_p1_fields

__all__ = [
    "Mesh",
    "DiscreteSpace",
    "AssembledSystem",
    "Assembler",
    "build_mesh",
    "build_space",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_load",
    "assemble_system",
    "norms",
    "interpolate",
    "evaluate",
    "boundary_trace",
]


@dataclass(frozen=True, eq=False)
class Mesh:
    N: int
    nodes: np.ndarray
    xi: np.ndarray  # reference Gauss points on [0, 1]
    wref: np.ndarray  # reference weights, sum to 1
    points: np.ndarray  # (N, q)
    weights: np.ndarray  # (N, q), sum to the cell length

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def q(self) -> int:
        return self.xi.size


def build_mesh(N: int, q: int = 2) -> Mesh:
    """Uniform mesh of ``[0, 1]`` with ``q``-point Gauss quadrature per cell."""
    if int(N) != N or N < 2:
        raise InvalidSize(f"N must be an integer >= 2, got {N}")
    if q not in (1, 2, 3):
        raise InvalidSize(f"quadrature order must be 1, 2 or 3, got {q}")
    N = int(N)
    x, w = np.polynomial.legendre.leggauss(q)
    xi = 0.5 * (x + 1.0)
    wref = 0.5 * w
    nodes = np.arange(N + 1) / N
    h = 1.0 / N
    points = nodes[:-1, None] + h * xi[None, :]
    weights = np.broadcast_to(h * wref, (N, q)).copy()
    return Mesh(N=N, nodes=nodes, xi=xi, wref=wref, points=points, weights=weights)


@dataclass(frozen=True, eq=False)
class DiscreteSpace:
    mesh: Mesh
    spec: ProblemSpec
    Q: np.ndarray
    full_dim: int
    dim: int
    loc: np.ndarray  # (N, n + k) full dof indices per cell
    idx_w0: np.ndarray
    idx_wN: np.ndarray
    E: sp.csr_matrix  # full x reduced constraint map (orthonormal columns)
    gram_l2: sp.csr_matrix
    gram_v: sp.csr_matrix
    assembly_map: sp.csr_matrix = None  # local element entries -> reduced CSR data
    pattern: tuple = None  # (indices, indptr) of the reduced CSR matrix

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def r(self) -> int:
        return self.spec.r

    @property
    def dof_w(self) -> int:
        return self.k * (self.mesh.N + 1)

    @property
    def dof_z(self) -> int:
        return (self.n - self.k) * self.mesh.N

    def basis(self, xi):
        """Local basis values ``(len(xi), n, n+k)``, ``G*``-values and ``G*``-derivatives."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        G, Q, k = self.spec.G, self.Q, self.k
        lo = (1.0 - xi)[:, None, None] * G[None]
        hi = xi[:, None, None] * G[None]
        phi = np.concatenate([lo, hi, np.broadcast_to(Q, (xi.size,) + Q.shape)], axis=2)
        eye = np.eye(k)
        zk = np.zeros((k, self.n - k))
        wv = np.stack([np.hstack([(1 - s) * eye, s * eye, zk]) for s in xi])
        dw = np.hstack([-eye, eye, zk]) / self.mesh.h
        return phi, wv, dw

    def to_full(self, coeffs):
        return np.asarray(self.E @ np.asarray(coeffs).T).T


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    M: sp.csr_matrix
    K: sp.csr_matrix
    b: np.ndarray
    t: float


def build_space(mesh: Mesh, spec: ProblemSpec) -> DiscreteSpace:
    n, k, r, N = spec.n, spec.k, spec.r, mesh.N
    F = spec.F
    if r:
        gram = np.linalg.norm(F.conj().T @ F - np.eye(r))
        P = F @ F.conj().T
        if gram > ORTHO_TOL or np.linalg.norm(P @ P - P) > ORTHO_TOL:
            raise ConstraintInconsistent(f"F fails F*F = I / projection invariants (|F*F - I| = {gram:.3e})")
    Q = orthocomplement_basis(spec.G)
    full_dim = N * n + k
    cells = np.arange(N)
    loc = np.concatenate(
        [
            cells[:, None] * n + np.arange(k)[None, :],
            (cells[:, None] + 1) * n + np.arange(k)[None, :],
            cells[:, None] * n + k + np.arange(n - k)[None, :],
        ],
        axis=1,
    )
    idx_w0 = np.arange(k)
    idx_wN = N * n + np.arange(k)
    interior = np.setdiff1d(np.arange(full_dim), np.concatenate([idx_w0, idx_wN]))
    dim = interior.size + r

    rows = [interior]
    cols = [r + np.arange(interior.size)]
    vals = [np.ones(interior.size, dtype=complex)]
    if r:
        yy = np.arange(r)
        rows += [np.repeat(idx_wN, r), np.repeat(idx_w0, r)]
        cols += [np.tile(yy, k), np.tile(yy, k)]
        vals += [F[:k, :].ravel(), F[k:, :].ravel()]
    E = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(full_dim, dim)
    )

    space = DiscreteSpace(
        mesh=mesh, spec=spec, Q=Q, full_dim=full_dim, dim=dim, loc=loc,
        idx_w0=idx_w0, idx_wN=idx_wN, E=E, gram_l2=None, gram_v=None,
    )
    amap, pattern = _assembly_map(space)
    object.__setattr__(space, "assembly_map", amap)
    object.__setattr__(space, "pattern", pattern)
    eye = MatrixField.constant(np.eye(n))
    m_l2 = assemble_mass(space, eye, 0.0)
    m_d = _assemble_reduced(space, _local_derivative_gram(space, np.broadcast_to(np.eye(k), (N, mesh.q, k, k))))
    object.__setattr__(space, "gram_l2", m_l2)
    object.__setattr__(space, "gram_v", (m_l2 + m_d).tocsr())
    return space


# --------------------------------------------------------------------- helpers
def _at_quadrature(space: DiscreteSpace, fld: MatrixField, t: float) -> np.ndarray:
    mesh = space.mesh
    vals = fld.eval(t, mesh.points.ravel())
    return vals.reshape(mesh.N, mesh.q, *fld.shape)


def _scatter(space: DiscreteSpace, local: np.ndarray) -> sp.csr_matrix:
    L = space.loc.shape[1]
    rows = np.broadcast_to(space.loc[:, :, None], (space.mesh.N, L, L))
    cols = np.broadcast_to(space.loc[:, None, :], (space.mesh.N, L, L))
    return sp.coo_matrix(
        (local.ravel(), (rows.ravel(), cols.ravel())), shape=(space.full_dim, space.full_dim)
    ).tocsr()


def _reduce(space: DiscreteSpace, full: sp.spmatrix) -> sp.csr_matrix:
    E = space.E
    return (E.conj().T @ full @ E).tocsr()


def _expand_rows(E: sp.csr_matrix, rows: np.ndarray):
    """Flattened nonzeros of ``E[rows]``: (owner position in ``rows``, column, value)."""
    cnt = np.diff(E.indptr)[rows]
    owner = np.repeat(np.arange(rows.size), cnt)
    first = np.cumsum(cnt) - cnt
    pos = np.repeat(E.indptr[rows], cnt) + np.arange(owner.size) - np.repeat(first, cnt)
    return owner, E.indices[pos], E.data[pos]


def _assembly_map(space: DiscreteSpace):
    """Sparse linear map from local element entries to the data of ``E^H K_full E``.

    Local entry ``(c, l, m)`` sits at full position ``(i, j)`` and contributes
    ``conj(E[i, a]) E[j, b]`` to reduced entry ``(a, b)``.  With the map built
    once, every re-assembly is a single sparse mat-vec.
    """
    N, L = space.loc.shape
    E = space.E.tocsr()
    rows_i = np.broadcast_to(space.loc[:, :, None], (N, L, L)).ravel()
    cols_j = np.broadcast_to(space.loc[:, None, :], (N, L, L)).ravel()
    e1, a, wa = _expand_rows(E, rows_i)
    e2, b, wb = _expand_rows(E, cols_j[e1])
    src = e1[e2]
    tr, tc, weight = a[e2], b, np.conj(wa[e2]) * wb
    dim = space.dim
    pattern = sp.csr_matrix((np.ones(tr.size), (tr, tc)), shape=(dim, dim))
    pattern.sum_duplicates()
    pattern.sort_indices()
    pkey = np.repeat(np.arange(dim, dtype=np.int64), np.diff(pattern.indptr)) * dim + pattern.indices
    slot = np.searchsorted(pkey, tr.astype(np.int64) * dim + tc)
    amap = sp.csr_matrix((weight, (slot, src)), shape=(pkey.size, rows_i.size))
    return amap, (pattern.indices.copy(), pattern.indptr.copy())


def _assemble_reduced(space: DiscreteSpace, local: np.ndarray) -> sp.csr_matrix:
    if space.assembly_map is None:
        return _reduce(space, _scatter(space, local))
    indices, indptr = space.pattern
    data = space.assembly_map @ local.ravel()
    return sp.csr_matrix((data, indices, indptr), shape=(space.dim, space.dim))


def _local_derivative_gram(space, S_q):
    _, _, dw = space.basis(space.mesh.xi)
    return np.einsum("cq,al,cqab,bm->clm", space.mesh.weights, dw, S_q, dw, optimize=True)


def _local_mass(space, W_q):
    phi, _, _ = space.basis(space.mesh.xi)
    Wphi = np.einsum("cqij,qjm->cqim", W_q, phi)
    return np.einsum("cq,qil,cqim->clm", space.mesh.weights, phi.conj(), Wphi)


# ------------------------------------------------------------------ operations
def assemble_mass(space: DiscreteSpace, weight: MatrixField, t: float, invert: bool = False) -> sp.csr_matrix:
    """Reduced weighted Gram matrix ``M[i, j] = (W(t) phi_j | phi_i)``.

    With ``invert=True`` the weight is ``W(t)^{-1}`` pointwise (the mass of the
    ``v = H u`` formulation when ``weight`` is ``H``).
    """
    W = _at_quadrature(space, weight, t)
    if invert:
        try:
            W = np.linalg.inv(W)
        except np.linalg.LinAlgError as exc:
            raise SingularWeight(f"weight not invertible at a quadrature point (t={t})") from exc
        if not np.all(np.isfinite(W)):
            raise SingularWeight(f"weight inverse is non-finite (t={t})")
    return _assemble_reduced(space, _local_mass(space, W))


def _local_stiffness(space: DiscreteSpace, spec: ProblemSpec, t: float, R_q=None, dR_q=None, S_q=None):
    mesh = space.mesh
    phi, wv, dw = space.basis(mesh.xi)
    wts = mesh.weights
    S_q = _at_quadrature(space, spec.S, t) if S_q is None else S_q
    local = _local_derivative_gram(space, S_q)
    P1 = _at_quadrature(space, spec.P1, 0.0)
    GhP1 = np.einsum("ai,cqij->cqaj", spec.G.conj().T, P1)
    local = local + np.einsum("cq,al,cqaj,qjm->clm", wts, dw, GhP1, phi)
    if R_q is None:
        R, dR = reduced_p1_fields(spec)
        R_q, dR_q = _at_quadrature(space, R, 0.0), _at_quadrature(space, dR, 0.0)
    X = np.einsum("cqia,qam->cqim", dR_q, wv) + np.einsum("cqia,am->cqim", R_q, dw)
    local = local - np.einsum("cq,qil,cqim->clm", wts, phi.conj(), X)
    P0 = _at_quadrature(space, spec.P0, 0.0)
    local = local - np.einsum("cq,qil,cqij,qjm->clm", wts, phi.conj(), P0, phi)
    return local


def _boundary_block(space: DiscreteSpace, W: np.ndarray) -> sp.csr_matrix:
    r = space.r
    out = sp.lil_matrix((space.dim, space.dim), dtype=complex)
    if r:
        out[:r, :r] = W
    return out.tocsr()


def assemble_stiffness(space: DiscreteSpace, spec: ProblemSpec, t: float) -> sp.csr_matrix:
    """Reduced stiffness ``K[i, j] = a(t, phi_j, phi_i)`` including the boundary term."""
    K = _assemble_reduced(space, _local_stiffness(space, spec, t))
    if space.r:
        K = K + _boundary_block(space, spec.W_R.eval(t, 0.0))
    return K.tocsr()


def assemble_load(space: DiscreteSpace, f: MatrixField, t: float) -> np.ndarray:
    """Reduced load ``b[i] = (f(t) | phi_i)``."""
    phi, _, _ = space.basis(space.mesh.xi)
    fq = _at_quadrature(space, f, t)[..., 0]
    local = np.einsum("cq,qil,cqi->cl", space.mesh.weights, phi.conj(), fq)
    full = np.zeros(space.full_dim, dtype=complex)
    np.add.at(full, space.loc.ravel(), local.ravel())
    return np.asarray(space.E.conj().T @ full)


def assemble_system(space: DiscreteSpace, spec: ProblemSpec, t: float, f: MatrixField | None = None) -> AssembledSystem:
    f = spec.forcing() if f is None else f
    return AssembledSystem(
        M=assemble_mass(space, spec.H, t, invert=True),
        K=assemble_stiffness(space, spec, t),
        b=assemble_load(space, f, t),
        t=float(t),
    )


class Assembler:
    """Assembly with memoisation of every time-independent piece.

    The mass depends on ``H`` only, the stiffness on ``S`` and ``W_R`` in time
    (``P0``, ``P1`` are time independent by construction).
    """

    def __init__(self, space: DiscreteSpace, spec: ProblemSpec | None = None):
        self.space = space
        self.spec = space.spec if spec is None else spec
        R, dR = reduced_p1_fields(self.spec)
        self._R = _at_quadrature(space, R, 0.0)
        self._dR = _at_quadrature(space, dR, 0.0)
        self._static = None
        self._mass = {}
        self._stiff = {}
        self._load = {}

    def _static_part(self):
        # stiffness without the S-term and without the boundary block
        if self._static is None:
            spec, space = self.spec, self.space
            N, q, k = space.mesh.N, space.mesh.q, spec.k
            local = _local_stiffness(space, spec, 0.0, self._R, self._dR, S_q=np.zeros((N, q, k, k)))
            self._static = _assemble_reduced(space, local)
        return self._static

    def mass(self, t: float) -> sp.csr_matrix:
        key = float(t) if self.spec.H.time_dependent else None
        if key not in self._mass:
            if key is not None and len(self._mass) > 4:
                self._mass.clear()
            self._mass[key] = assemble_mass(self.space, self.spec.H, t, invert=True)
        return self._mass[key]

    def stiffness(self, t: float) -> sp.csr_matrix:
        spec = self.spec
        key = float(t) if (spec.S.time_dependent or spec.W_R.time_dependent) else None
        if key not in self._stiff:
            if key is not None and len(self._stiff) > 4:
                self._stiff.clear()
            s_part = _assemble_reduced(self.space, _local_derivative_gram(self.space, _at_quadrature(self.space, spec.S, t)))
            K = self._static_part() + s_part
            if self.space.r:
                K = K + _boundary_block(self.space, spec.W_R.eval(t, 0.0))
            self._stiff[key] = K.tocsr()
        return self._stiff[key]

    def load(self, f: MatrixField, t: float) -> np.ndarray:
        key = (id(f), float(t) if f.time_dependent else None)
        if key not in self._load:
            if len(self._load) > 8:
                self._load.clear()
            self._load[key] = assemble_load(self.space, f, t)
        return self._load[key]


def norms(space: DiscreteSpace, coeffs) -> tuple[float, float]:
    """``(|v_h|_{L^2}, |v_h|_V)`` with ``|v|_V^2 = |v|^2 + |(G* v)'|^2``."""
    c = np.asarray(coeffs)
    h2 = float(np.real(np.vdot(c, space.gram_l2 @ c)))
    v2 = float(np.real(np.vdot(c, space.gram_v @ c)))
    return float(np.sqrt(max(h2, 0.0))), float(np.sqrt(max(v2, 0.0)))


def interpolate(space: DiscreteSpace, fn, project_warn: bool = True) -> np.ndarray:
    """Reduced coefficients of the ``V_h``-interpolant of ``fn: zeta -> K^n``.

    ``w = G* v`` is interpolated at the nodes, ``z = Q* v`` is averaged over each
    cell.  Data violating the essential condition are projected onto it.
    """
    spec, mesh = space.spec, space.mesh
    n, k, N = spec.n, spec.k, mesh.N

    def values(z):
        out = np.asarray(fn(z), dtype=complex)
        return out.reshape(z.size, n)

    full = np.zeros(space.full_dim, dtype=complex)
    wn = values(mesh.nodes) @ spec.G.conj()
    for a in range(k):
        full[np.arange(N + 1) * n + a] = wn[:, a]
    if n > k:
        vq = values(mesh.points.ravel()).reshape(N, mesh.q, n)
        zc = np.einsum("q,cqi,ib->cb", mesh.wref, vq, space.Q.conj())
        for b in range(n - k):
            full[np.arange(N) * n + k + b] = zc[:, b]
    trace = np.concatenate([full[space.idx_wN], full[space.idx_w0]])
    F = spec.F
    defect = trace - F @ (F.conj().T @ trace)
    if np.linalg.norm(defect) > 1e-12 * max(1.0, np.linalg.norm(trace)) and project_warn:
        warnings.warn(
            f"initial datum violates the essential boundary condition by {np.linalg.norm(defect):.3e}; projected",
            stacklevel=2,
        )
    return np.asarray(space.E.conj().T @ full)


def evaluate(space: DiscreteSpace, coeffs, xi=None) -> np.ndarray:
    """Values of ``v_h`` at ``zeta = node_c + h xi``, shape ``(N, len(xi), n)``.

    A 2-d ``coeffs`` (one row per time) gives ``(M, N, len(xi), n)``.
    """
    xi = space.mesh.xi if xi is None else np.atleast_1d(np.asarray(xi, dtype=float))
    phi, _, _ = space.basis(xi)
    c = np.asarray(coeffs)
    full = space.to_full(c)
    local = full[..., space.loc]
    return np.einsum("qil,...cl->...cqi", phi, local)


def boundary_trace(space: DiscreteSpace, coeffs) -> np.ndarray:
    """``C(v_h) = [w(1); w(0)]``."""
    full = space.to_full(np.asarray(coeffs))
    return np.concatenate([full[..., space.idx_wN], full[..., space.idx_w0]], axis=-1)
