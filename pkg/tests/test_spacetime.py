import math

import numpy as np
import pytest

from stwave import spacetime as st
from stwave import temporal as tc
from stwave.errors import InvalidArgumentError, MeshMismatchError
from stwave.mesh import gauss_rule, make_uniform_mesh, quadrature_points

PI = math.pi
UNIT = st.WaveDomain(1.0, 1.0)


def sine_field(grid, bc=st.StBC.ANSATZ):
    return st.SpaceTimeFunction.interpolate(grid, lambda x, t: np.sin(PI * x) * np.sin(PI * t), bc)


def quad_bilinear_form(grid, U, V, n_points=3):
    """a(u, v) for nodal bilinear fields by tensor Gauss quadrature (dense oracle)."""
    rule = gauss_rule(n_points)
    total = 0.0
    tn, xn = grid.time_mesh.nodes, grid.space_mesh.nodes
    for i in range(len(tn) - 1):
        ht = tn[i + 1] - tn[i]
        for j in range(len(xn) - 1):
            hx = xn[j + 1] - xn[j]
            for s, ws in zip(rule.points, rule.weights):
                for r, wr in zip(rule.points, rule.weights):
                    def grads(W):
                        w00, w01, w10, w11 = W[i, j], W[i, j + 1], W[i + 1, j], W[i + 1, j + 1]
                        dt = ((1 - r) * (w10 - w00) + r * (w11 - w01)) / ht
                        dx = ((1 - s) * (w01 - w00) + s * (w11 - w10)) / hx
                        return dt, dx
                    ut, ux = grads(U)
                    vt, vx = grads(V)
                    total += ws * wr * ht * hx * (-ut * vt + ux * vx)
    return total


# ---------------------------------------------------------------- modes


def test_eigenpair_examples():
    assert st.sine_eigenpairs(1.0, 1).mu[0] == pytest.approx(PI**2)
    assert st.sine_eigenpairs(2.0, 3).mu[2] == pytest.approx((3 * PI / 2) ** 2)
    with pytest.raises(InvalidArgumentError):
        st.sine_eigenpairs(1.0, 0)


def test_eigenvalues_increasing_and_exact_to_rounding():
    f = st.sine_eigenpairs(1.7, 10_000)
    assert np.all(np.diff(f.mu) > 0)
    k2 = f.mu * 1.7**2 / PI**2
    # integer index stored exactly; the float eigenvalue is within rounding of k^2
    assert np.array_equal(f.k, np.arange(1, 10_001))
    assert np.max(np.abs(k2 / f.k.astype(float) ** 2 - 1.0)) <= 4 * np.finfo(float).eps


@pytest.mark.parametrize("K,n", [(8, 64), (32, 256)])
def test_orthonormality(K, n):
    m = make_uniform_mesh(n, 0.0, 1.0)
    pts, wts = quadrature_points(m, gauss_rule(10))
    B = st.sine_eigenpairs(1.0, K).basis(pts.ravel())
    G = (B * wts.ravel()) @ B.T
    assert np.max(np.abs(G - np.eye(K))) <= 1e-12


def test_modal_decompose_examples():
    L = 1.0
    c = st.modal_decompose(lambda x: st.sine_mode(L, 2, x), L, 8)
    assert np.allclose(c, np.eye(8)[1], atol=1e-13)
    c = st.modal_decompose(lambda x: 3 * st.sine_mode(L, 1, x) - st.sine_mode(L, 4, x), L, 8)
    assert np.allclose(c, [3, 0, 0, -1, 0, 0, 0, 0], atol=1e-13)
    with pytest.raises(InvalidArgumentError):
        st.modal_decompose(np.zeros(20), L, 8)


def test_modal_roundtrip():
    rng = np.random.default_rng(0)
    L = 2.5
    c = rng.standard_normal(8)
    x = make_uniform_mesh(40, 0.0, L).nodes
    v = st.modal_reconstruct(c, L, x)
    back = st.modal_decompose(v, L, 8)
    assert np.max(np.abs(back - c)) <= 1e-10
    assert np.max(np.abs(st.modal_reconstruct(back, L, x) - v)) <= 1e-10


def test_spectral_solve_examples():
    t = np.linspace(0, 1, 11)
    f = st.spectral_solve(UNIT, st.InitialVelocity(1, PI), 4, t)
    x = np.linspace(0, 1, 7)
    exact = np.sin(PI * t)[:, None] * np.sin(PI * x)[None, :]
    assert np.allclose(f.evaluate(x), exact, atol=1e-13)
    f = st.spectral_solve(UNIT, st.ModalDensity(1, tc.Density.const(1.0)), 2, t)
    assert np.allclose(f.amplitudes()[0], (1 - np.cos(PI * t)) / PI**2, atol=1e-11)
    assert np.all(f.coefficients[1] == 0)
    z = st.spectral_solve(UNIT, st.ModalDensity(1, tc.Density.const(0.0)), 2, t)
    assert not np.any(z.coefficients)
    with pytest.raises(InvalidArgumentError):
        st.spectral_solve(UNIT, st.InitialVelocity(3, 1.0), 2, t)


def test_spectral_solve_grid_density():
    grid = UNIT.grid(8, 16)
    spec = st.GridDensity.from_function(grid, lambda x, t: np.sin(PI * x) * np.ones_like(t))
    f = st.spectral_solve(UNIT, spec, 4, [1.0])
    assert f.amplitudes()[0, 0] == pytest.approx(2 / PI**2, abs=1e-10)
    assert np.allclose(f.amplitudes()[1:, 0], 0, atol=1e-12)


# ---------------------------------------------------------------- functions


def test_spacetime_function_bcs():
    grid = UNIT.grid(4, 5)
    for bc, nt in [(st.StBC.ANSATZ, 4), (st.StBC.TEST, 4)]:
        u = st.SpaceTimeFunction(grid, np.ones((nt, 4)), bc)
        vals = u(np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0]))
        assert np.all(vals[:, [0, 2]] == 0.0)
        assert vals[0 if bc is st.StBC.ANSATZ else 1, 1] == 0.0
    with pytest.raises(InvalidArgumentError):
        st.SpaceTimeFunction(grid, np.ones((5, 4)), st.StBC.ANSATZ)


# ---------------------------------------------------------------- assembly


def test_bilinear_form_against_quadrature_oracle():
    rng = np.random.default_rng(1)
    for nt, nx in [(3, 4), (8, 8), (5, 7)]:
        grid = st.WaveDomain(1.3, 0.9).grid(nt, nx)
        system = st.assemble_spacetime(grid)
        A = system.A.to_dense()
        for _ in range(3):
            u = st.SpaceTimeFunction(grid, rng.standard_normal((nt, nx - 1)), st.StBC.ANSATZ)
            v = st.SpaceTimeFunction(grid, rng.standard_normal((nt, nx - 1)), st.StBC.TEST)
            ref = quad_bilinear_form(grid, u.nodal_values(), v.nodal_values())
            assert v.vector @ A @ u.vector == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_bilinear_form_separable_example():
    grid = UNIT.grid(6, 6)
    system = st.assemble_spacetime(grid)
    u = st.SpaceTimeFunction.interpolate(grid, lambda x, t: np.sin(PI * x) * t)
    v = st.SpaceTimeFunction.interpolate(grid, lambda x, t: np.sin(PI * x) * (1 - t), st.StBC.TEST)
    ref = quad_bilinear_form(grid, u.nodal_values(), v.nodal_values())
    assert v.vector @ (system.A @ u.vector) == pytest.approx(ref, rel=1e-10)
    # product of 1D integrals for the interpolants
    tm = system.time
    s = np.sin(PI * grid.space_mesh.nodes[1:-1])
    a_t = (1 - grid.time_mesh.nodes[:-1]) @ (tm.D @ grid.time_mesh.nodes[1:])
    c_t = (1 - grid.time_mesh.nodes[:-1]) @ (tm.C @ grid.time_mesh.nodes[1:])
    sep = -a_t * (s @ system.Mx @ s) + c_t * (s @ system.Kx @ s)
    assert v.vector @ (system.A @ u.vector) == pytest.approx(sep, rel=1e-12)
    assert not np.any(system.A @ np.zeros(system.A.shape[1]))


def test_wave_rhs_examples():
    grid = UNIT.grid(8, 16)
    F = st.assemble_wave_rhs(grid, st.InitialVelocity(1, PI))
    assert np.all(F[1:] == 0) and np.all(F[0] > 0)
    s = np.sin(PI * grid.space_mesh.nodes[1:-1])
    assert np.allclose(F[0] / s, F[0, 0] / s[0], rtol=1e-12)
    F = st.assemble_wave_rhs(grid, st.GridDensity(np.ones(grid.shape)))
    # test hats in t integrate to T - h_t/2, interior hats in x to L - h_x
    assert F.sum() <= 1.0 and F.sum() == pytest.approx((1 - 1 / 16) * (1 - 1 / 16), rel=1e-13)
    assert not np.any(st.assemble_wave_rhs(grid, st.GridDensity(np.zeros(grid.shape))))
    with pytest.raises(MeshMismatchError):
        st.assemble_wave_rhs(grid, st.GridDensity(np.ones((3, 3))))


def test_grid_density_csv(tmp_path):
    grid = UNIT.grid(2, 4)
    p = tmp_path / "g.csv"
    x = grid.space_mesh.nodes
    rows = [",".join(format(v, ".17g") for v in x)] + [",".join(["1.0"] * 5)] * 3
    p.write_text("\n".join(rows) + "\n", encoding="utf-8")
    g = st.GridDensity.from_csv(p)
    assert g.values.shape == (3, 5)
    F = st.assemble_wave_rhs(grid, g)
    assert F.shape == (2, 3)
    p.write_text("0,1\n1,2\n3\n", encoding="utf-8")
    with pytest.raises(InvalidArgumentError):
        st.GridDensity.from_csv(p)
    p.write_text("0,0.3,1\n1,1,1\n1,1,1\n", encoding="utf-8")
    with pytest.raises(MeshMismatchError):
        st.assemble_wave_rhs(UNIT.grid(1, 2), st.GridDensity.from_csv(p))


# ---------------------------------------------------------------- solver


def test_solve_examples():
    grid = UNIT.grid(64, 64)
    system = st.assemble_spacetime(grid)
    u = st.solve_wave(system, st.assemble_wave_rhs(grid, st.InitialVelocity(1, PI)))
    err, ref = u.l2_error(lambda x, t: np.sin(PI * x) * np.sin(PI * t))
    assert err / ref <= 0.02
    z = st.solve_wave(system, np.zeros(system.A.shape[0]))
    assert not np.any(z.coefficients)
    with pytest.raises(MeshMismatchError):
        st.solve_wave(system, np.ones(3))


def test_modal_density_matches_spectral_oracle():
    spec = st.ModalDensity(1, tc.Density.const(1.0))
    errs = []
    for n in (8, 16, 32):
        grid = UNIT.grid(n, n)
        u = st.solve_wave(st.assemble_spacetime(grid), st.assemble_wave_rhs(grid, spec))
        err, _ = u.l2_error(lambda x, t: np.sin(PI * x) * (1 - np.cos(PI * t)) / PI**2)
        errs.append(err)
    assert errs[-1] <= 1e-3 * 0.2
    assert all(3.0 <= a / b <= 5.0 for a, b in zip(errs, errs[1:])), errs


def test_modal_consistency_matched_mesh():
    # the nodal sine is a discrete spatial eigenvector: columns follow the
    # temporal solver at the discrete eigenvalue
    k = 2
    grid = st.WaveDomain(1.0, 1.5).grid(12, 10)
    system = st.assemble_spacetime(grid)
    g = tc.Density.cosine(3.0)
    u = st.solve_wave(system, st.assemble_wave_rhs(grid, st.ModalDensity(k, g)))
    s = np.sin(k * PI * grid.space_mesh.nodes[1:-1])
    ms, ks = s @ system.Mx @ s, s @ system.Kx @ s
    mu_h = ks / ms
    b = st._space_load(grid.space_mesh, lambda x: np.sin(k * PI * x))
    scale = (b @ s) / ms
    ut = tc.solve_modal(tc.ModalParams(mu_h, 1.5), grid.time_mesh, g).coefficients * scale
    proj = (u.coefficients @ (system.Mx @ s)) / ms
    assert np.max(np.abs(proj - ut)) <= 1e-8 * np.max(np.abs(ut))
    # and the spatial profile is exactly the sine
    resid = u.coefficients - np.outer(proj, s)
    assert np.max(np.abs(resid)) <= 1e-10 * np.max(np.abs(u.coefficients))


# ---------------------------------------------------------------- norms


def test_energy_norm_examples():
    grid = UNIT.grid(64, 64)
    u = sine_field(grid)
    assert st.energy_norm(u) == pytest.approx(PI / math.sqrt(2), rel=0.01)
    assert st.energy_norm(st.SpaceTimeFunction(grid, np.zeros((64, 63)), st.StBC.ANSATZ)) == 0
    assert st.energy_norm(u.scaled(-3.5)) == pytest.approx(3.5 * st.energy_norm(u), rel=1e-12)
    # Gram form agrees with the ansatz Gram operator
    system = st.assemble_spacetime(grid)
    assert st.energy_norm(u) ** 2 == pytest.approx(u.vector @ (system.M_ansatz @ u.vector), rel=1e-12)


def test_graph_norm_examples():
    grid = UNIT.grid(12, 12)
    system = st.assemble_spacetime(grid)
    F = st.assemble_wave_rhs(grid, st.ModalDensity(1, tc.Density.const(1.0))).ravel()
    u = st.solve_wave(system, F)
    assert st.wave_graph_norm(u, 1).value == pytest.approx(st.test_dual_norm(system, F).value, rel=1e-8)
    assert st.wave_graph_norm(sine_field(grid), 2).value > 0.1
    zero = st.SpaceTimeFunction(grid, np.zeros((12, 11)), st.StBC.ANSATZ)
    assert st.wave_graph_norm(zero).value == 0.0
    assert st.wave_extended_dual_norm(zero).value == 0.0


def test_isometry_under_refinement():
    coarse = UNIT.grid(16, 16)
    spec = st.InitialVelocity(1, PI)
    u = st.solve_wave(st.assemble_spacetime(coarse), st.assemble_wave_rhs(coarse, spec))
    fine = coarse.refine(4)
    fd = st.test_dual_norm(st.assemble_spacetime(fine), st.assemble_wave_rhs(fine, spec)).value
    assert st.wave_graph_norm(u, 4).value / fd == pytest.approx(1.0, abs=0.02)


def test_extended_functional_pre_history_and_band():
    rng = np.random.default_rng(2)
    grid = UNIT.grid(6, 6)
    for _ in range(20):
        u = st.random_ansatz_field(grid, rng)
        ext, G = st.extended_functional(u)
        assert G.shape == (11, 5)
        assert np.all(G[ext.time_mesh.nodes[1:-1] < 0] == 0.0)
        g, e = st.wave_graph_norm(u, 1).value, st.wave_extended_dual_norm(u, 1).value
        assert e * 0.98 <= g <= math.sqrt(2) * e * 1.02
        assert g >= math.sqrt(2) * st.l2_norm(u) * 0.95


def test_energy_continuity_random_pairs():
    rng = np.random.default_rng(3)
    grid = UNIT.grid(5, 6)
    system = st.assemble_spacetime(grid)
    A = system.A.to_sparse()
    N, M = system.N_test.to_sparse(), system.M_ansatz.to_sparse()
    U = rng.standard_normal((A.shape[1], 1000))
    V = rng.standard_normal((A.shape[0], 1000))
    a = np.einsum("ij,ij->j", V, A @ U)
    nu = np.sqrt(np.einsum("ij,ij->j", U, M @ U))
    nv = np.sqrt(np.einsum("ij,ij->j", V, N @ V))
    assert np.all(nu * nv - np.abs(a) >= -1e-12 * nu * nv)


def test_interior_residual_of_sine_example():
    rep = st.example_sine(32)
    assert rep.interior_residual <= 1e-2
    assert rep.graph_norm_interpolant > 0.5


# ---------------------------------------------------------------- inf-sup and demos


def test_infsup_wave_decays():
    b8 = st.infsup_wave(UNIT.grid(8, 8))
    b16 = st.infsup_wave(UNIT.grid(16, 16))
    assert b8.beta_h > 0 and b16.beta_h < b8.beta_h
    assert b8.mu is None and b8.bound_infsup is None and b8.const_continuity == 1.0
    sizes = [8, 16, 32]
    betas = [b8.beta_h, b16.beta_h, st.infsup_wave(UNIT.grid(32, 32)).beta_h]
    assert np.polyfit(np.log(sizes), np.log(betas), 1)[0] < 0


def test_infsup_wave_against_dense():
    import scipy.linalg as sla

    grid = UNIT.grid(4, 5)
    system = st.assemble_spacetime(grid)
    A, N, M = system.A.to_dense(), system.N_test.to_dense(), system.M_ansatz.to_dense()
    ref = math.sqrt(sla.eigh(A.T @ np.linalg.solve(N, A), M, eigvals_only=True)[0])
    assert st.infsup_wave(grid).beta_h == pytest.approx(ref, rel=1e-6)


def test_theorem1_examples():
    rows = st.theorem1_demo(1.0, 1.0, [1, 2, 4, 8, 16, 32])
    r = {row.k: row for row in rows}
    assert 0 < r[1].r_k < math.inf
    assert r[32].r_k / r[2].r_k >= 10
    band = [r[k].r_k_over_sqrt_mu for k in (4, 8, 16, 32)]
    assert max(band) / min(band) <= 2
    with pytest.raises(InvalidArgumentError):
        st.theorem1_demo(1.0, 1.0, [8], n=32)


def test_cfl_examples():
    q1 = st.cfl_demo(1.0, 3)
    assert all(lv.report.satisfied for lv in q1)
    q2 = [lv.violation_factor for lv in st.cfl_demo(2.0, 4)]
    assert q2[-1] > q2[-2] > 1.0
    zero = st.cfl_demo(1.0, 1, spec_factory=lambda g: st.GridDensity(np.zeros(g.shape)))
    assert zero[0].report.satisfied and zero[0].report.norm_h11 == 0
    with pytest.raises(InvalidArgumentError):
        st.cfl_demo(0.0)


def test_wave_stability_random_band_limited():
    rng = np.random.default_rng(4)
    grid = UNIT.grid(16, 16)
    for i in range(20):
        rep = st.wave_stability(grid, st.random_band_limited_density(grid, rng), case=str(i))
        assert rep.satisfied
        assert rep.bound == 1.0 / math.sqrt(2.0) * rep.norm_f_l2
