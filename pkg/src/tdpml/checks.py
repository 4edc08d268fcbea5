"""Fast self-checks behind ``python -m tdpml verify``.

Each check returns (name, passed, detail).  They use independent oracles
(scipy Bessel functions, quadrature, finite differences) and finish in a
few seconds in total.
"""
import numpy as np
from scipy.integrate import quad
from scipy.special import spherical_jn, spherical_yn

from .calderon import TangentialTrace, etm_apply, exterior_series, pairing
from .config import PhysicalConfig, RunConfig
from .green import dyadic_green
from .pml_geom import PMLProfile, sigma, sigma_hat
from .pml_solver import RadialFEM, RadialGrid, assemble_and_solve, make_bvp, modal_load
from .source import ModalSource, SourceTerm
from .specfun import ModeIndex, modes_up_to, sph_hankel1, sph_harmonic, sphere_quadrature, \
    spherical_basis, vector_harmonics
from .xform import LaplaceContour, TimeGrid, laplace_inverse_contour


def check_hankel():
    zs = [0.3 + 0.1j, 2.0 + 1.5j, -4 + 0.25j, 10.0 + 3j]
    err = max(abs(sph_hankel1(n, z) - (spherical_jn(n, z) + 1j * spherical_yn(n, z)))
              / abs(sph_hankel1(n, z)) for n in range(0, 9) for z in zs)
    return "specfun: Hankel vs scipy j + i y", err < 1e-10, f"max rel err {err:.2e}"


def check_harmonics():
    th, ph, w = sphere_quadrature(12)
    modes = modes_up_to(4)
    Y = np.array([sph_harmonic(i, th, ph) for i in modes])
    G = (Y * w) @ Y.conj().T
    U = np.array([vector_harmonics(i, th, ph)[0] for i in modes])
    GU = np.einsum("aqc,bqc,q->ab", U, U.conj(), w)
    err = max(abs(G - np.eye(len(modes))).max(), abs(GU - np.eye(len(modes))).max())
    return "specfun: harmonic orthonormality", err < 1e-12, f"max dev {err:.2e}"


def check_transform():
    src = ModalSource((), T0=1.5)
    T = 4.0
    contour = LaplaceContour.for_period(1 / T, 2 * T, 128)
    grid = TimeGrid(2 * T, 200)
    u = laplace_inverse_contour(src.laplace_time(contour.upper_points), contour, grid).values
    err = abs(u - src.time(grid.times)).max()
    return "xform: contour inversion of the sin^8 pulse", err < 1e-6, f"max err {err:.2e}"


def check_sigma_hat():
    prof = PMLProfile(1.0, 2.5, 3.0, m=2)
    err = max(abs(sigma_hat(prof, r) - quad(lambda t: float(sigma(prof, t)), 1.0, r)[0] / r)
              for r in (1.2, 2.0, 2.5, 3.5))
    return "pml_geom: sigma_hat vs quadrature", err < 1e-10, f"max err {err:.2e}"


def check_green():
    s, x, y, h = 0.4 + 1.3j, np.array([1.4, 0.2, -0.7]), np.array([0.1, -0.3, 0.5]), 1e-4
    g = dyadic_green(s, x, y)
    hess_curl = np.zeros((3, 3), complex)
    cols = []
    for l in range(3):
        e = np.eye(3)[l] * h
        cols.append((dyadic_green(s, x + e, y).hessian - dyadic_green(s, x - e, y).hessian) / (2 * h))
    J = np.array(cols)
    hess_curl[0], hess_curl[1], hess_curl[2] = J[1, 2] - J[2, 1], J[2, 0] - J[0, 2], J[0, 1] - J[1, 0]
    err = abs(hess_curl).max() / abs(g.hessian).max()
    return "green: curl of the Hessian vanishes", err < 1e-4, f"rel residual {err:.2e}"


def check_etm():
    phys = PhysicalConfig()
    rng = np.random.default_rng(0)
    worst = np.inf
    for s in 0.25 + 1j * np.linspace(-30, 30, 16):
        tr = TangentialTrace.random(5, rng)
        worst = min(worst, pairing(etm_apply(tr, s, phys), tr).real)
    th, ph = 0.7, 1.9
    tr = TangentialTrace.single(3, ModeIndex(2, -1), 0.4 - 0.2j, 1.1j)
    E, _ = exterior_series(tr, 0.3 + 2j, phys.R, th, ph, phys)
    e_r = spherical_basis(th, ph)[0]
    tan = E - np.dot(E, e_r) * e_r
    err = abs(tan - tr.evaluate(th, ph)).max()
    ok = worst >= -1e-12 and err < 1e-12
    return "calderon: EtM coercivity and series trace", ok, f"min Re <Bw,w> {worst:.2e}, trace err {err:.2e}"


def check_solver():
    phys = PhysicalConfig(sigma0=0.0, d=1.0)
    src = ModalSource((SourceTerm(ModeIndex(1, 0), "TE"),))
    s = 0.25 + 4j
    gA = RadialGrid.build(phys.a, phys.R, phys.R, 16, 0, order=6)
    gB = RadialGrid.build(phys.a, phys.R, phys.rho, 16, 16, order=6, profile=phys.profile())
    fA, fB = RadialFEM(gA), RadialFEM(gB, phys.profile())
    r = np.linspace(phys.a, phys.R, 9)
    out = []
    for fem in (fA, fB):
        bvp = make_bvp(fem, ModeIndex(1, 0), "TE", s, modal_load(fem, src, src.terms[0], s), phys, "impedance")
        out.append(fem.evaluate(assemble_and_solve(bvp, fem).values, r))
    err = abs(out[0] - out[1]).max() / abs(out[0]).max()
    return "pml_solver: exact impedance at R vs at rho", err < 1e-8, f"rel diff {err:.2e}"


ALL_CHECKS = (check_hankel, check_harmonics, check_transform, check_sigma_hat, check_green, check_etm,
              check_solver)


def run_all():
    return [chk() for chk in ALL_CHECKS]
