"""Time integration of ``d/dt (H(t)^{-1} v) + A(t) v = f`` on a Galerkin space.

The unknown is ``v = H u``.  The time derivative is discretised as
``(M(t_{m+1}) v_{m+1} - M(t_m) v_m) / tau`` with ``M(t)`` the ``H(t)^{-1}``
weighted mass, so no derivative of ``H`` is ever evaluated.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretize import Assembler, DiscreteSpace, evaluate, interpolate, norms
from .errors import GridMisaligned, InvalidSize, ShapeMismatch, SingularSystem
from .problem import MatrixField, ProblemSpec

__all__ = [
    "Scheme",
    "Trajectory",
    "Stepper",
    "make_scheme",
    "step",
    "solve_ivp",
    "discrete_propagator",
    "write_trajectory_csv",
]

_KINDS = {
    "implicit-euler": "implicit-euler",
    "ie": "implicit-euler",
    "euler": "implicit-euler",
    "crank-nicolson": "crank-nicolson",
    "cn": "crank-nicolson",
}
GRID_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Scheme:
    kind: str
    tau: float
    T: float
    t_grid: np.ndarray

    def index(self, t: float) -> int:
        """Position of ``t`` on the grid; raises :class:`GridMisaligned` otherwise."""
        i = int(np.argmin(np.abs(self.t_grid - t)))
        if abs(self.t_grid[i] - t) > GRID_TOL * max(1.0, abs(t)):
            raise GridMisaligned(f"t = {t!r} is not a grid point")
        return i

    def steps(self, lo: int = 0, hi: int | None = None):
        hi = self.t_grid.size - 1 if hi is None else hi
        for m in range(lo, hi):
            yield self.t_grid[m], self.t_grid[m + 1]


def make_scheme(kind: str, tau: float, T: float, breakpoints=(), t0: float = 0.0) -> Scheme:
    """Grid on ``[t0, T]`` with every breakpoint as a node.

    Each segment between consecutive breakpoints is split uniformly with the
    fewest steps not exceeding ``tau`` (so steps may be slightly shorter).
    """
    key = str(kind).lower().replace("_", "-").replace(" ", "-")
    if key not in _KINDS:
        raise ValueError(f"unknown scheme {kind!r}")
    if not tau > 0 or not np.isfinite(tau):
        raise InvalidSize(f"tau must be positive, got {tau}")
    if not T > t0:
        raise InvalidSize(f"T must exceed t0, got T={T}, t0={t0}")
    cuts = [t0] + sorted(b for b in breakpoints if t0 < b < T) + [T]
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = max(1, int(np.ceil((b - a) / tau - 1e-9)))
        pieces.append(np.linspace(a, b, m + 1)[:-1])
    grid = np.concatenate(pieces + [np.array([T])])
    return Scheme(kind=_KINDS[key], tau=float(tau), T=float(T), t_grid=grid)


class Stepper:
    """One-step solution operator with cached assembly and factorisations."""

    def __init__(self, space: DiscreteSpace, spec: ProblemSpec, scheme: Scheme, f: MatrixField | None = None):
        self.space = space
        self.spec = spec
        self.scheme = scheme
        self.f = spec.forcing() if f is None else f
        self.asm = Assembler(space, spec)
        self._lu = {}
        self._autonomous = spec.autonomous

    def _factor(self, A, key):
        if key is not None and key in self._lu:
            return self._lu[key]
        try:
            lu = spla.splu(sp.csc_matrix(A, dtype=complex))
        except RuntimeError as exc:
            raise SingularSystem(str(exc)) from exc
        if key is not None:
            self._lu[key] = lu
        return lu

    def _parts(self, t0: float, t1: float):
        tau = t1 - t0
        M0, M1 = self.asm.mass(t0), self.asm.mass(t1)
        if self.scheme.kind == "implicit-euler":
            K = self.asm.stiffness(t1)
            A, B = M1 + tau * K, M0
            fb = lambda: tau * self.asm.load(self.f, t1)  # noqa: E731
        else:
            th = 0.5 * (t0 + t1)
            K = self.asm.stiffness(th)
            A, B = M1 + 0.5 * tau * K, M0 - 0.5 * tau * K
            fb = lambda: tau * self.asm.load(self.f, th)  # noqa: E731
        key = round(tau / self.scheme.tau, 9) if self._autonomous else None
        return self._factor(A, key), B, fb

    def step(self, t0: float, t1: float, v: np.ndarray, with_load: bool = True) -> np.ndarray:
        lu, B, fb = self._parts(t0, t1)
        rhs = B @ v
        if with_load:
            rhs = rhs + (fb() if v.ndim == 1 else fb()[:, None])
        out = lu.solve(np.asarray(rhs, dtype=complex))
        if not np.all(np.isfinite(out)):
            raise SingularSystem(f"non-finite solution on step [{t0}, {t1}]")
        return out


def step(space: DiscreteSpace, spec: ProblemSpec, scheme: Scheme, t_m: float, v_m, f=None) -> np.ndarray:
    """Advance ``v_m`` from grid time ``t_m`` to the next grid time."""
    m = scheme.index(t_m)
    if m >= scheme.t_grid.size - 1:
        raise GridMisaligned(f"t_m = {t_m} is the final grid point")
    st = Stepper(space, spec, scheme, f)
    return st.step(scheme.t_grid[m], scheme.t_grid[m + 1], np.asarray(v_m, dtype=complex))


@dataclass(eq=False)
class Trajectory:
    space: DiscreteSpace
    spec: ProblemSpec
    scheme: Scheme
    times: np.ndarray
    coeffs: np.ndarray  # (len(times), dim)
    norm_v: np.ndarray
    norm_vV: np.ndarray
    energy: np.ndarray
    f: MatrixField
    x0: np.ndarray = field(repr=False, default=None)

    def v_values(self, m: int, xi=None) -> np.ndarray:
        return evaluate(self.space, self.coeffs[m], xi)

    def u_values(self, m: int, xi=None) -> np.ndarray:
        """``u(t_m) = H(t_m)^{-1} v_h(t_m)`` at points ``node_c + h xi``; shape ``(N, q, n)``."""
        mesh = self.space.mesh
        xi = mesh.xi if xi is None else np.atleast_1d(np.asarray(xi, dtype=float))
        z = (mesh.nodes[:-1, None] + mesh.h * xi[None, :]).ravel()
        H = self.spec.H.eval(self.times[m], z)
        v = self.v_values(m, xi).reshape(-1, self.spec.n)
        return np.linalg.solve(H, v[..., None])[..., 0].reshape(mesh.N, xi.size, self.spec.n)


def _coerce_initial(space: DiscreteSpace, x0) -> np.ndarray:
    if x0 is None:
        return np.zeros(space.dim, dtype=complex)
    if callable(x0):
        return interpolate(space, x0)
    c = np.asarray(x0, dtype=complex)
    if c.shape != (space.dim,):
        raise ShapeMismatch(f"initial coefficients have shape {c.shape}, expected ({space.dim},)")
    return c


def solve_ivp(space: DiscreteSpace, spec: ProblemSpec, scheme: Scheme, x0, f: MatrixField | None = None,
              t0: float | None = None, stepper: Stepper | None = None) -> Trajectory:
    """Integrate from ``v(t0) = x0`` to the end of ``scheme``.

    ``x0`` is a callable ``zeta -> K^n`` (interpolated into the space, projected
    with a warning when it violates the essential condition) or a reduced
    coefficient vector.  ``t0`` defaults to the first grid point.
    """
    f = spec.forcing() if f is None else f
    lo = 0 if t0 is None else scheme.index(t0)
    st = stepper if stepper is not None else Stepper(space, spec, scheme, f)
    v = _coerce_initial(space, x0)
    times = scheme.t_grid[lo:]
    coeffs = np.empty((times.size, space.dim), dtype=complex)
    coeffs[0] = v
    for j, (a, b) in enumerate(scheme.steps(lo), start=1):
        try:
            v = st.step(a, b, v)
        except SingularSystem as exc:
            raise SingularSystem(f"step failed at t = {a}: {exc}") from exc
        coeffs[j] = v
    nv = np.empty(times.size)
    nV = np.empty(times.size)
    en = np.empty(times.size)
    for j, t in enumerate(times):
        nv[j], nV[j] = norms(space, coeffs[j])
        en[j] = float(np.real(np.vdot(coeffs[j], st.asm.mass(t) @ coeffs[j])))
    return Trajectory(space=space, spec=spec, scheme=scheme, times=times, coeffs=coeffs,
                      norm_v=nv, norm_vV=nV, energy=en, f=f, x0=coeffs[0].copy())


def discrete_propagator(space: DiscreteSpace, spec: ProblemSpec, scheme: Scheme, s: float, t: float,
                        stepper: Stepper | None = None) -> np.ndarray:
    """Dense ``U_h(t, s)``: the product of homogeneous one-step operators."""
    i, j = scheme.index(s), scheme.index(t)
    if j < i:
        raise GridMisaligned(f"propagator needs s <= t, got s={s}, t={t}")
    st = stepper if stepper is not None else Stepper(space, spec, scheme)
    U = np.eye(space.dim, dtype=complex)
    for a, b in scheme.steps(i, j):
        U = st.step(a, b, U, with_load=False)
    return U


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(traj: Trajectory, path, snapshot_times=()) -> list[str]:
    """Write ``t, norm_v, norm_v_V, energy`` per step, plus one DOF file per snapshot.

    Returns the list of written paths.  Floats use ``repr`` so files are
    byte-stable for identical runs.
    """
    path = os.fspath(path)
    written = [path]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "norm_v", "norm_v_V", "energy"])
        for row in zip(traj.times, traj.norm_v, traj.norm_vV, traj.energy):
            w.writerow([_fmt(x) for x in row])
    stem, _ = os.path.splitext(path)
    for ts in snapshot_times:
        m = traj.scheme.index(ts) - traj.scheme.index(traj.times[0])
        if not 0 <= m < traj.times.size:
            raise GridMisaligned(f"snapshot time {ts} outside the trajectory")
        p = f"{stem}_snapshot_{m:06d}.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "dof", "re", "im"])
            for d, c in enumerate(traj.coeffs[m]):
                w.writerow([_fmt(traj.times[m]), d, _fmt(c.real), _fmt(c.imag)])
        written.append(p)
    return written
