import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from mpform.analysis import random_admissible_spec
from mpform.discretize import (
    Assembler,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    boundary_trace,
    build_mesh,
    build_space,
    evaluate,
    interpolate,
    norms,
)
from mpform.errors import ConstraintInconsistent, InvalidSize, SingularWeight
from mpform.presets import preset
from mpform.problem import MatrixField

from conftest import make_spec


def _dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A)


# -------------------------------------------------------------------- mesh
def test_mesh_counts():
    m = build_mesh(4, 2)
    assert m.nodes.size == 5 and m.points.size == 8
    assert np.all(np.diff(m.nodes) > 0)
    assert np.allclose(m.weights.sum(axis=1), 0.25)


def test_midpoint_rule():
    m = build_mesh(2, 1)
    assert np.allclose(m.weights, 0.5)
    assert np.allclose(m.points[:, 0], [0.25, 0.75])


def test_two_point_rule_integrates_cubic():
    m = build_mesh(3, 2)
    assert np.sum(m.weights * m.points**3) == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("N,q", [(1, 2), (0, 2), (4, 4), (2.5, 2)])
def test_mesh_rejects_bad_sizes(N, q):
    with pytest.raises(InvalidSize):
        build_mesh(N, q)


# ------------------------------------------------------------------- space
@pytest.mark.parametrize("name,dim", [("heat-dirichlet", 9), ("heat-neumann", 11), ("heat-periodic", 10),
                                      ("damped-wave-dirichlet", 19), ("damped-wave-free", 21),
                                      ("damped-wave-periodic", 20)])
def test_reduced_dimension(name, dim):
    spec = preset(name)
    space = build_space(build_mesh(10), spec)
    n, k, r, N = spec.n, spec.k, spec.r, 10
    assert space.dim == dim == k * (N + 1) + (n - k) * N - (2 * k - r)


def test_dirichlet_pins_both_traces():
    space = build_space(build_mesh(8), preset("heat-dirichlet"))
    c = np.random.default_rng(0).standard_normal(space.dim)
    assert np.abs(boundary_trace(space, c)).max() == 0


def test_periodic_trace_coupling():
    space = build_space(build_mesh(8), preset("heat-periodic"))
    c = np.random.default_rng(1).standard_normal(space.dim)
    w1, w0 = boundary_trace(space, c)
    assert abs(w1 - w0) < 1e-14 and abs(w0) > 0


def test_constraint_holds_for_random_specs(rng):
    for _ in range(10):
        spec = random_admissible_spec(rng)
        space = build_space(build_mesh(6), spec)
        c = rng.standard_normal((4, space.dim)) + 1j * rng.standard_normal((4, space.dim))
        tr = boundary_trace(space, c)
        F = spec.F
        defect = tr - tr @ (F @ F.conj().T).T
        assert np.abs(defect).max() < 1e-12 * max(1.0, np.abs(tr).max())


def test_inconsistent_F():
    spec = make_spec(r=1, F=0.5 * np.ones((2, 1)), W_R=MatrixField.constant([[0.0]]))
    with pytest.raises(ConstraintInconsistent):
        build_space(build_mesh(4), spec)


# --------------------------------------------------------------- stiffness
def test_heat_stiffness_is_second_difference():
    N = 10
    space = build_space(build_mesh(N), preset("heat-dirichlet"))
    K = _dense(assemble_stiffness(space, space.spec, 0.0))
    ref = N * (2 * np.eye(N - 1) - np.eye(N - 1, k=1) - np.eye(N - 1, k=-1))
    assert np.abs(K - ref).max() < 1e-12


def test_pure_diffusion_stiffness_hermitian_psd(rng):
    for _ in range(5):
        spec = random_admissible_spec(rng)
        spec = make_spec(n=spec.n, k=spec.k, r=spec.r, G=spec.G, F=spec.F, S=spec.S, H=spec.H)
        space = build_space(build_mesh(8), spec)
        K = _dense(assemble_stiffness(space, spec, 0.3))
        assert np.abs(K - K.conj().T).max() < 1e-12 * np.abs(K).max()
        assert np.linalg.eigvalsh(K).min() > -1e-10 * np.abs(K).max()


def test_damped_wave_form_against_cellwise_oracle(rng):
    N, kk = 4, 1.7
    spec = preset("damped-wave-free", k=kk)
    space = build_space(build_mesh(N), spec)
    K = _dense(assemble_stiffness(space, spec, 0.0))
    h = 1.0 / N
    for _ in range(5):
        cu, cv = rng.standard_normal(space.dim), rng.standard_normal(space.dim)
        fu, fv = space.to_full(cu), space.to_full(cv)
        # interleaved layout: w at node i is entry 2i, z on cell c is entry 2c + 1
        du, dv = np.diff(fu[0::2].real) / h, np.diff(fv[0::2].real) / h
        q = space.Q[1, 0].real
        zu, zv = q * fu[1::2].real, q * fv[1::2].real
        oracle = h * np.sum(kk * du * dv + zu * dv - du * zv)
        assert cv @ K @ cu == pytest.approx(oracle, abs=1e-12)
        assert abs((cu @ K @ cu).imag) < 1e-14


def test_boundary_block_only_on_trace_coordinates():
    spec_a = preset("heat-robin", w=0.0)
    spec_b = preset("heat-robin", w=2.5)
    space = build_space(build_mesh(6), spec_a)
    D = _dense(assemble_stiffness(space, spec_b, 0.0) - assemble_stiffness(space, spec_a, 0.0))
    assert np.allclose(D[:2, :2], 2.5 * np.eye(2))
    D[:2, :2] = 0
    assert np.abs(D).max() < 1e-12


def test_boundary_symmetric_part_hermitian():
    spec = preset("damped-wave-free")
    space = build_space(build_mesh(8), spec)
    K = _dense(assemble_stiffness(space, spec, 0.0))
    spec0 = make_spec(n=2, k=1, r=2, G=spec.G, F=spec.F, S=spec.S, H=spec.H)
    K1 = _dense(assemble_stiffness(space, spec0, 0.0))
    assert np.abs(K1 - K1.conj().T).max() < 1e-12
    # the first-order coupling contributes a skew part only (its trace terms vanish for this F)
    assert np.abs(K - K1).max() > 0.1


def test_local_bandwidth():
    spec = preset("damped-wave-free")
    space = build_space(build_mesh(12), spec)
    K = sp.coo_matrix(assemble_stiffness(space, spec, 0.0))
    M = sp.coo_matrix(assemble_mass(space, spec.H, 0.0, invert=True))
    r = spec.r
    for A in (K, M):
        inner = (A.row >= r) & (A.col >= r) & (A.data != 0)
        assert np.abs(A.row[inner] - A.col[inner]).max() <= 3 * spec.n


# -------------------------------------------------------------------- mass
def test_plain_mass_row_sums():
    N = 8
    space = build_space(build_mesh(N), preset("heat-neumann"))
    M = _dense(assemble_mass(space, MatrixField.constant([[1.0]]), 0.0))
    rows = M.sum(axis=1).real
    # y = (w(1), w(0)) come first and carry half cells
    assert np.allclose(rows[:2], 0.5 / N)
    assert np.allclose(rows[2:], 1.0 / N)


def test_inverse_weight_scaling():
    spec = preset("damped-wave-dirichlet")
    space = build_space(build_mesh(6), spec)
    plain = _dense(assemble_mass(space, MatrixField.constant(np.eye(2)), 0.0))
    half = _dense(assemble_mass(space, MatrixField.constant(2 * np.eye(2)), 0.0, invert=True))
    assert np.abs(half - 0.5 * plain).max() < 1e-15


def test_z_block_diagonal():
    spec = preset("damped-wave-dirichlet")
    space = build_space(build_mesh(6), spec)
    full = space.E.toarray()
    M = _dense(assemble_mass(space, spec.H, 0.0, invert=True))
    # reduced columns whose full image is a z-dof (odd full index)
    zcols = [j for j in range(space.dim) if np.flatnonzero(full[:, j])[0] % 2 == 1]
    Z = M[np.ix_(zcols, zcols)]
    assert np.abs(Z - np.diag(np.diag(Z))).max() == 0


def test_singular_weight():
    # vanishes at the midpoint of the second cell
    space = build_space(build_mesh(2, 1), make_spec())
    W = MatrixField.from_callable(lambda t, z: np.array([[z - 0.75]]), (1, 1))
    with pytest.raises(SingularWeight):
        assemble_mass(space, W, 0.0, invert=True)


# -------------------------------------------------------------------- load
def test_load_examples():
    N = 10
    space = build_space(build_mesh(N), preset("heat-dirichlet"))
    assert np.abs(assemble_load(space, MatrixField.constant([[0.0]]), 0.0)).max() == 0
    b = assemble_load(space, MatrixField.constant([[1.0]]), 0.0)
    assert np.allclose(b, 1.0 / N)
    bump = MatrixField.from_callable(lambda t, z: ((z > 0.3) & (z < 0.4)).astype(float)[:, None, None], (1, 1),
                                     vectorized=True)
    b = assemble_load(space, bump, 0.0)
    # cell [0.3, 0.4] touches interior nodes 3 and 4, i.e. reduced entries 2 and 3
    assert set(np.flatnonzero(np.abs(b) > 0)) == {2, 3}


# ------------------------------------------------------------------- norms
def test_norm_examples():
    space = build_space(build_mesh(200), preset("heat-dirichlet"))
    assert norms(space, np.zeros(space.dim)) == (0.0, 0.0)
    c = interpolate(space, lambda z: np.sin(np.pi * z))
    h, v = norms(space, c)
    assert abs(h**2 - 0.5) < 1e-3
    assert abs((v**2 - h**2) - np.pi**2 / 2) < 0.01 * np.pi**2 / 2


def test_pure_z_component_norm():
    spec = preset("damped-wave-dirichlet")
    space = build_space(build_mesh(16), spec)
    c = interpolate(space, lambda z: np.stack([0 * z, np.cos(3 * z)], -1))
    h, v = norms(space, c)
    assert h > 0 and v == pytest.approx(h, rel=1e-14)


# ------------------------------------------------------ interpolation etc.
def test_interpolation_projects_with_warning():
    space = build_space(build_mesh(8), preset("heat-dirichlet"))
    with pytest.warns(UserWarning):
        c = interpolate(space, lambda z: np.ones_like(z))
    assert np.allclose(c, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        interpolate(space, lambda z: np.sin(np.pi * z))


def test_evaluate_reproduces_linear_function():
    space = build_space(build_mesh(5), preset("heat-neumann"))
    c = interpolate(space, lambda z: 2 * z - 1)
    vals = evaluate(space, c, np.array([0.0, 0.3, 1.0]))
    z = space.mesh.nodes[:-1, None] + space.mesh.h * np.array([0.0, 0.3, 1.0])[None, :]
    assert np.abs(vals[..., 0] - (2 * z - 1)).max() < 1e-14


def test_assembler_matches_direct_assembly():
    spec = preset("damped-wave-free", k=lambda t: 1 + t, h_scale=lambda t: 1 + 0.5 * t)
    space = build_space(build_mesh(9), spec)
    asm = Assembler(space)
    for t in (0.0, 0.4, 0.4, 1.0):
        assert abs(asm.mass(t) - assemble_mass(space, spec.H, t, invert=True)).max() < 1e-14
        assert abs(asm.stiffness(t) - assemble_stiffness(space, spec, t)).max() < 1e-12
