import numpy as np
import pytest
from scipy.special import spherical_jn, spherical_yn

from tdpml.calderon import TangentialTrace, div_norm, exterior_series, mode_slot
from tdpml.config import PhysicalConfig
from tdpml.pml_geom import alpha_beta, sigma
from tdpml.pml_solver import (TE, TM, ModalBVP, RadialFEM, RadialGrid, SolverError,
                              assemble_and_solve, band_matvec, lagrange_basis, gll_nodes,
                              make_bvp, modal_load, reconstruct_fields, reduce_to_modal_bvps,
                              sesquilinear_energy, solve_layer_problem)
from tdpml.source import ModalSource, SourceTerm
from tdpml.specfun import ModeIndex

PHYS = PhysicalConfig(d=1.0, sigma0=4.0)
FREE = PhysicalConfig(d=1.0, sigma0=0.0)
SRC = ModalSource((SourceTerm(ModeIndex(1, 0), TE), SourceTerm(ModeIndex(2, 1), TM, 0.5 - 0.2j)))


def grid_for(phys, n=16, order=6, grading="stretched"):
    return RadialGrid.build(phys.a, phys.R, phys.rho, n, n, order, phys.profile(), grading)


def radial_pair(n, k, r):
    """r j_n(kr), r y_n(kr) and their r-derivatives."""
    z = k * r
    j, y = spherical_jn(n, z), spherical_yn(n, z)
    dj, dy = spherical_jn(n, z, derivative=True), spherical_yn(n, z, derivative=True)
    return (r * j, r * y), (j + z * dj, y + z * dy)


def test_gll_and_lagrange():
    for p in (1, 2, 5):
        nodes = gll_nodes(p)
        val, der = lagrange_basis(nodes, nodes)
        np.testing.assert_allclose(val, np.eye(p + 1), atol=1e-13)
        np.testing.assert_allclose(der.sum(axis=1), 0, atol=1e-11)


def test_grid_invariants():
    g = grid_for(PHYS, n=8)
    assert g.R in g.breaks and g.a == PHYS.a and g.outer == PHYS.rho
    assert g.num_dofs == g.n_elements * g.order + 1
    with pytest.raises(ValueError):
        RadialGrid.build(0.5, 1.0, 2.0, 4, 8)
    with pytest.raises(ValueError):
        RadialGrid(np.array([0.5, 0.8, 1.2]), 1, 1.0)
    inner = g.restrict(PHYS.a, PHYS.R)
    assert inner.outer == PHYS.R and inner.n_elements == 8


def test_banded_matvec_matches_dense():
    fem = RadialFEM(grid_for(PHYS, n=8, order=3), PHYS.profile())
    ab = fem.system(2, 0.25 + 3j)
    p, n = 3, ab.shape[1]
    dense = np.zeros((n, n), complex)
    for i in range(n):
        for j in range(max(0, i - p), min(n, i + p + 1)):
            dense[i, j] = ab[p + i - j, j]
    np.testing.assert_allclose(dense, dense.T)
    x = np.random.default_rng(0).standard_normal(n)
    np.testing.assert_allclose(band_matvec(ab, x, p), dense @ x)


def test_zero_source_gives_no_bvps():
    empty = ModalSource((SourceTerm(ModeIndex(1, 0), TE, 0.0),))
    assert reduce_to_modal_bvps(empty, 1.0, PHYS, grid_for(PHYS, 8)) == []


def test_source_support_checked():
    bad = ModalSource((SourceTerm(ModeIndex(1, 0), TE),), r1=0.4, r2=0.9)
    with pytest.raises(ValueError):
        reduce_to_modal_bvps(bad, 1.0, PHYS, grid_for(PHYS, 8))


def test_zero_rhs_zero_solution():
    fem = RadialFEM(grid_for(PHYS, 8), PHYS.profile())
    bvp = make_bvp(fem, ModeIndex(1, 0), TE, 0.25 + 1j, np.zeros(fem.grid.num_dofs), PHYS)
    assert not assemble_and_solve(bvp, fem).values.any()


@pytest.mark.parametrize("s", [0.25 + 0j, 0.25 + 4j, 0.25 - 11j])
@pytest.mark.parametrize("n", [1, 3])
def test_free_space_te_matches_bessel(s, n):
    """sigma0 = 0, u(a) = 1, u(rho) = 0: u = c1 r j_n(kr) + c2 r y_n(kr)."""
    g = grid_for(FREE)
    fem = RadialFEM(g, FREE.profile())
    k = 1j * s
    a, b = g.a, g.outer
    (ja, ya), _ = radial_pair(n, k, a)
    (jb, yb), _ = radial_pair(n, k, b)
    c = np.linalg.solve([[ja, ya], [jb, yb]], [1.0, 0.0])
    bvp = ModalBVP(ModeIndex(n, 0), TE, s, np.zeros(g.num_dofs), {0: 1.0, g.num_dofs - 1: 0.0})
    sol = assemble_and_solve(bvp, fem)
    r = np.linspace(a, b, 37)
    (jr, yr), _ = radial_pair(n, k, r)
    exact = c[0] * jr + c[1] * yr
    assert np.max(abs(fem.evaluate(sol.values, r) - exact)) <= 1e-8 * np.max(abs(exact))


@pytest.mark.parametrize("s", [0.25 + 0.5j, 0.25 + 6j])
def test_free_space_layer_problem_matches_bessel(s):
    g = grid_for(FREE).restrict(FREE.R, FREE.rho)
    fem = RadialFEM(g, FREE.profile())
    idx, n, rho, R, k = ModeIndex(2, -1), 2, FREE.rho, FREE.R, 1j * s
    xi = TangentialTrace.single(2, idx, a=0.3 + 0.1j, b=-0.7)
    sols = solve_layer_problem(xi, s, FREE, g, fem)
    slot = mode_slot(idx)
    r = np.linspace(R, rho, 25)
    (jr, yr), (djr, dyr) = radial_pair(n, k, r)
    (jR, yR), (djR, dyR) = radial_pair(n, k, R)
    (jp, yp), (djp, dyp) = radial_pair(n, k, rho)
    # TE: u(R) = 0, u(rho) = rho b
    c = np.linalg.solve([[jR, yR], [jp, yp]], [0.0, rho * xi.b[slot]])
    te = c[0] * jr + c[1] * yr
    got = fem.evaluate(sols[(idx, TE)].values, r)
    assert np.max(abs(got - te)) <= 1e-8 * np.max(abs(te))
    # TM: w'(R) = 0, w'(rho) = -eps s rho a
    c = np.linalg.solve([[djR, dyR], [djp, dyp]], [0.0, -s * rho * xi.a[slot]])
    tm = c[0] * jr + c[1] * yr
    got = fem.evaluate(sols[(idx, TM)].values, r)
    assert np.max(abs(got - tm)) <= 1e-8 * np.max(abs(tm))
    # tangential E at rho equals xi
    f_te = reconstruct_fields(sols[(idx, TE)], rho, FREE)
    f_tm = reconstruct_fields(sols[(idx, TM)], rho, FREE)
    assert f_te["E_V"][0] == pytest.approx(xi.b[slot], rel=1e-12)
    assert f_tm["E_U"][0] == pytest.approx(xi.a[slot], rel=1e-8)


def test_layer_problem_zero_data():
    g = grid_for(PHYS).restrict(PHYS.R, PHYS.rho)
    assert solve_layer_problem(TangentialTrace(2), 0.25 + 1j, PHYS, g) == {}


def _manufactured_errors(order, sizes, s=0.25 + 2j, n=2):
    phys = PhysicalConfig(d=1.5, sigma0=4.0)
    prof = phys.profile()
    a, rho, R, d = phys.a, phys.rho, phys.R, phys.d
    L = rho - a
    u = lambda r: np.sin(np.pi * (r - a) / L)
    du = lambda r: np.pi / L * np.cos(np.pi * (r - a) / L)
    d2u = lambda r: -(np.pi / L) ** 2 * u(r)
    errs, hs = [], []
    for N in sizes:
        g = RadialGrid.build(a, R, rho, N, N, order, prof, "uniform")
        fem = RadialFEM(g, prof)
        r = fem.xq
        al, be = alpha_beta(prof, r)
        dal = np.where(r > R, prof.sigma0 * prof.m * ((r - R) / d) ** (prof.m - 1) / (d * prof.s1), 0.0)
        f = dal / al**2 * du(r) - d2u(r) / al + al * (n * (n + 1) / (r * be) ** 2 + s**2) * u(r)
        bvp = ModalBVP(ModeIndex(n, 0), TE, s, fem.load(f), {0: 0.0, g.num_dofs - 1: 0.0})
        sol = assemble_and_solve(bvp, fem)
        uh = fem.evaluate(sol.values, r.ravel()).reshape(r.shape)
        errs.append(np.sqrt(np.sum(fem.wq * abs(uh - u(r)) ** 2)))
        hs.append(g.h)
    return np.array(errs), np.array(hs)


def test_manufactured_rate_linear_elements():
    errs, hs = _manufactured_errors(1, [8, 16, 32, 64])
    rates = np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])
    assert np.all(abs(rates - 2.0) <= 0.1), rates


def test_manufactured_rate_quadratic_elements():
    errs, hs = _manufactured_errors(2, [8, 16, 32])
    rates = np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])
    assert np.all(abs(rates - 3.0) <= 0.15), rates


def test_discrete_coercivity(rng):
    fem = RadialFEM(grid_for(PHYS, 8, 2), PHYS.profile())
    s1, g = PHYS.s1, 1 + PHYS.sigma0 / PHYS.s1
    worst = np.inf
    for s in s1 + 1j * np.array([-30.0, -2.0, 0.0, 0.7, 12.0]):
        for _ in range(200):
            v = rng.standard_normal(fem.grid.num_dofs) + 1j * rng.standard_normal(fem.grid.num_dofs)
            form, dv2, v2 = sesquilinear_energy(fem, v, 2, s)
            lower = s1 / abs(s) ** 2 / g * (dv2 + abs(s) ** 2 * v2)
            worst = min(worst, (form / (PHYS.mu * s)).real / lower)
    # the constant is at least min(1/mu, eps) = 1 for this medium
    assert worst >= 1 - 1e-10


def test_residual_check_and_singular_guard():
    fem = RadialFEM(grid_for(PHYS, 8, 2), PHYS.profile())
    bvp = reduce_to_modal_bvps(SRC, 0.25 + 1j, PHYS, fem.grid, fem)[0]
    sol = assemble_and_solve(bvp, fem)
    assert sol.residual <= 1e-10
    bad = ModalBVP(bvp.mode, TE, 0.25 + 1j, np.full(fem.grid.num_dofs, np.nan))
    with pytest.raises((SolverError, ValueError)):
        assemble_and_solve(bad, fem)


def _solutions(s=0.25 + 3j, n=32, order=8):
    g = grid_for(PHYS, n, order)
    fem = RadialFEM(g, PHYS.profile())
    out = {}
    for term, bvp in zip(SRC.terms, reduce_to_modal_bvps(SRC, s, PHYS, g, fem)):
        out[term.polarization] = (assemble_and_solve(bvp, fem, SRC), term)
    return out, fem


def test_te_reconstruction_is_maxwell_exact():
    (sol, term), fem = _solutions()[0][TE], None
    s, nu = sol.s, sol.mode.nu
    r = np.linspace(0.55, 0.98, 11)
    f = reconstruct_fields(sol, r, PHYS)
    u = f["E_V"] * r
    du = sol.fem.evaluate(sol.values, r, derivative=True)
    # curl E = -(nu E_V / r) Y e_r - ((r E_V)' / r) U
    np.testing.assert_allclose(-nu * f["E_V"] / r + PHYS.mu * s * f["H_r"], 0, atol=1e-12 * abs(u).max())
    np.testing.assert_allclose(-du / r + PHYS.mu * s * f["H_U"], 0, atol=1e-12 * abs(du).max())


def test_tm_reconstruction_satisfies_maxwell_on_inner_region():
    sol, term = _solutions()[0][TM]
    s, nu = sol.s, sol.mode.nu
    r, h = np.r_[np.linspace(0.52, 0.57, 3), np.linspace(0.65, 0.85, 4), 0.95, 0.98], 1e-5
    f = reconstruct_fields(sol, r, PHYS, term)
    fp = reconstruct_fields(sol, r + h, PHYS, term)
    fm = reconstruct_fields(sol, r - h, PHYS, term)
    d_rEU = ((r + h) * fp["E_U"] - (r - h) * fm["E_U"]) / (2 * h)
    faraday = (d_rEU - nu * f["E_r"]) / r + PHYS.mu * s * f["H_V"]
    assert np.max(abs(faraday)) <= 1e-6 * np.max(abs(PHYS.mu * s * f["H_V"]))
    # Ampere (r component) holds by construction
    J_r = 0.0
    np.testing.assert_allclose(-nu * f["H_V"] / r, PHYS.eps * s * f["E_r"] + J_r, atol=1e-13)


def test_tangential_continuity_at_R():
    sols, fem = _solutions()
    R, h = PHYS.R, 1e-13
    sol, _ = sols[TE]
    left = reconstruct_fields(sol, R - h, PHYS)["E_V"]
    right = reconstruct_fields(sol, R + h, PHYS)["E_V"]
    assert abs(left - right) <= 1e-10 * abs(left)
    sol, term = sols[TM]
    left = reconstruct_fields(sol, R - h, PHYS, term)["E_U"]
    right = reconstruct_fields(sol, R + h, PHYS, term)["E_U"]
    assert abs(left - right) <= 1e-5 * abs(left)


def test_tm_flux_jump_shrinks_with_refinement():
    # w' is only weakly continuous; its jump at R is a discretization error
    jumps = []
    for n in (16, 32, 64):
        sol, term = _solutions(n=n, order=4)[0][TM]
        f = [reconstruct_fields(sol, PHYS.R + e, PHYS, term)["E_U"][0] for e in (-1e-13, 1e-13)]
        jumps.append(abs(f[0] - f[1]) / abs(f[0]))
    assert jumps[0] > jumps[1] > jumps[2]
    assert jumps[1] / jumps[2] > 2**3


def test_reconstruct_outside_domain():
    sol, _ = _solutions()[0][TE]
    with pytest.raises(ValueError):
        reconstruct_fields(sol, PHYS.rho + 0.5, PHYS)


def test_tm_condition_from_series():
    """d(r H_V)/dr = -eps s r E_U for the outgoing series, so w' = 0 exactly where E_U = 0."""
    tr = TangentialTrace.single(2, ModeIndex(2, 0), a=1.0)
    s, th, ph, h = 0.25 + 2j, 0.9, 0.0, 1e-6
    from tdpml.specfun import vector_harmonics
    U, V = vector_harmonics(ModeIndex(2, 0), th, ph)

    def coeffs(r):
        E, H = exterior_series(tr, s, r, th, ph, FREE)
        return np.vdot(U, E) / np.vdot(U, U), np.vdot(V, H) / np.vdot(V, V)

    for r in (1.2, 1.7):
        E_U, _ = coeffs(r)
        dw = ((r + h) * coeffs(r + h)[1] - (r - h) * coeffs(r - h)[1]) / (2 * h)
        assert dw == pytest.approx(-FREE.eps * s * r * E_U, rel=1e-7)


def test_layer_stability_monitor_bounded():
    g = grid_for(PHYS).restrict(PHYS.R, PHYS.rho)
    fem = RadialFEM(g, PHYS.profile())
    idx = ModeIndex(1, 1)
    xi = TangentialTrace.single(1, idx, a=0.6, b=-0.3j)
    s1, gfac = PHYS.s1, 1 + PHYS.sigma0 / PHYS.s1
    r = fem.xq.ravel()
    w = fem.wq.ravel() * r**2
    al, be = alpha_beta(PHYS.profile(), r)
    ratios = []
    for s in s1 + 1j * np.linspace(-20, 20, 21):
        sols = solve_layer_problem(xi, s, PHYS, g, fem)
        e2 = c2 = 0.0
        for sol in sols.values():
            f = reconstruct_fields(sol, r, PHYS)
            e2 += np.sum(w * (abs(f["E_r"]) ** 2 + abs(f["E_U"]) ** 2 + abs(f["E_V"]) ** 2))
            curl = [be**2 / al * f["H_r"], al * f["H_U"], al * f["H_V"]]
            c2 += np.sum(w * sum(abs(PHYS.mu * s * c) ** 2 for c in curl))
        lhs = np.sqrt(c2) + abs(s) * np.sqrt(e2)
        ratios.append(lhs / (gfac**2 / s1 * abs(s) * (1 + abs(s)) * div_norm(xi)))
    assert np.all(np.isfinite(ratios)) and 0 < max(ratios) < 1e3
