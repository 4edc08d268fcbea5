"""Per-mode radial finite elements for the PML problem.

Spherical symmetry splits the Maxwell system into TE and TM families per
harmonic (n, m).  Both reduce to one scalar unknown on [a, rho]:

    TE:  u = r E_V     (physical V-coefficient of E^p)
    TM:  w = r H_V     (physical V-coefficient of H^p)

with the shared symmetric form

    A(s)[u, v] = int alpha^-1 u' v' + alpha (nu^2 / r_t^2 + eps mu s^2) u v dr,

where r_t is the stretched radius.  TE carries essential conditions at both
ends, TM natural ones.  With ``outer="impedance"`` the outer end is R and the
exact outgoing condition u'(R) = lam u(R) is imposed weakly.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from scipy.linalg import solve_banded

from .calderon import TangentialTrace, curl_norm, div_norm, impedance_coefficient, mode_slot
from .pml_geom import alpha_beta, stretch_radius
from .specfun import ModeIndex

TE, TM = "TE", "TM"
MIN_ELEMENTS = 8


class SolverError(RuntimeError):
    pass


def gll_nodes(p):
    if p == 1:
        return np.array([-1.0, 1.0])
    inner = legendre.Legendre.basis(p).deriv().roots()
    return np.concatenate([[-1.0], np.sort(inner.real), [1.0]])


def lagrange_basis(nodes, x):
    """Values and derivatives of the Lagrange basis on ``nodes`` at points x."""
    x = np.asarray(x, dtype=float)
    k = len(nodes)
    val = np.ones((x.size, k))
    der = np.zeros((x.size, k))
    for j in range(k):
        others = np.delete(nodes, j)
        denom = np.prod(nodes[j] - others)
        factors = x[:, None] - others[None, :]
        val[:, j] = np.prod(factors, axis=1) / denom
        for i in range(k - 1):
            der[:, j] += np.prod(np.delete(factors, i, axis=1), axis=1) / denom
    return val, der


@dataclass(frozen=True)
class RadialGrid:
    """Element breakpoints on [a, rho_or_R] with R always a breakpoint."""

    breaks: np.ndarray
    order: int
    R: float

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        object.__setattr__(self, "breaks", b)
        if self.order < 1:
            raise ValueError("element order must be >= 1")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must increase strictly")
        if not np.any(np.isclose(b, self.R, rtol=0, atol=1e-13)):
            raise ValueError("R must be a breakpoint")

    @classmethod
    def build(cls, a, R, rho, n_inner, n_layer, order=2, profile=None, grading="stretched",
              ratio=1.15):
        """Uniform elements on [a, R]; layer elements per ``grading``.

        ``stretched`` spaces the layer uniformly in the stretched radius,
        ``geometric`` grows element sizes by ``ratio`` away from R and
        ``uniform`` is uniform in r.  ``rho <= R`` builds the inner part only.
        """
        if n_inner < MIN_ELEMENTS and a < R:
            raise ValueError(f"need at least {MIN_ELEMENTS} elements in [a, R]")
        inner = np.linspace(a, R, n_inner + 1) if a < R else np.array([R])
        if rho <= R:
            return cls(inner, order, R)
        if n_layer < MIN_ELEMENTS:
            raise ValueError(f"need at least {MIN_ELEMENTS} elements in [R, rho]")
        if grading == "stretched" and profile is not None:
            target = np.linspace(R, float(stretch_radius(profile, rho)), n_layer + 1)
            fine = np.linspace(R, rho, 4001)
            layer = np.interp(target, stretch_radius(profile, fine), fine)
            layer[0], layer[-1] = R, rho
        elif grading == "geometric":
            widths = ratio ** np.arange(n_layer)
            layer = R + (rho - R) * np.concatenate([[0], np.cumsum(widths)]) / widths.sum()
        elif grading in ("uniform", "stretched"):
            layer = np.linspace(R, rho, n_layer + 1)
        else:
            raise ValueError(f"unknown grading {grading!r}")
        return cls(np.concatenate([inner, layer[1:]]), order, R)

    @property
    def a(self):
        return self.breaks[0]

    @property
    def outer(self):
        return self.breaks[-1]

    @property
    def n_elements(self):
        return len(self.breaks) - 1

    @property
    def num_dofs(self):
        return self.n_elements * self.order + 1

    @property
    def h(self):
        return float(np.max(np.diff(self.breaks)))

    @property
    def nodes(self):
        ref = gll_nodes(self.order)
        lo, hi = self.breaks[:-1], self.breaks[1:]
        pts = lo[:, None] + (hi - lo)[:, None] * (ref[None, :-1] + 1) / 2
        return np.concatenate([pts.ravel(), [self.outer]])

    def dof_at(self, r):
        hit = np.flatnonzero(np.isclose(self.nodes, r, rtol=0, atol=1e-12))
        if hit.size != 1:
            raise ValueError(f"r={r} is not a grid node")
        return int(hit[0])

    def restrict(self, lo, hi):
        keep = (self.breaks >= lo - 1e-13) & (self.breaks <= hi + 1e-13)
        b = self.breaks[keep]
        if b[0] > lo + 1e-13 or b[-1] < hi - 1e-13:
            raise ValueError("restriction bounds must be breakpoints")
        return RadialGrid(b, self.order, self.R if b[0] <= self.R <= b[-1] else b[0])


class RadialFEM:
    """Element matrices for one grid and medium; reused across modes and s."""

    def __init__(self, grid, profile=None, eps=1.0, mu=1.0, quad_extra=4):
        self.grid, self.profile, self.eps, self.mu = grid, profile, eps, mu
        p = grid.order
        self.ref_nodes = gll_nodes(p)
        xg, wg = legendre.leggauss(2 * p + quad_extra)
        phi, dphi = lagrange_basis(self.ref_nodes, xg)
        lo, hi = grid.breaks[:-1], grid.breaks[1:]
        jac = (hi - lo) / 2
        self.xq = lo[:, None] + jac[:, None] * (xg[None, :] + 1)
        self.wq = jac[:, None] * wg[None, :]
        self.phi = phi
        self.dphi = dphi[None, :, :] / jac[:, None, None]
        self.alpha, self.beta = self.coefficients(self.xq)
        self.rt = self.xq * self.beta
        w = self.wq
        self.k_stiff = np.einsum("eq,eqi,eqj->eij", w / self.alpha, self.dphi, self.dphi)
        self.k_ang = np.einsum("eq,qi,qj->eij", w * self.alpha / self.rt**2, phi, phi)
        self.mass = np.einsum("eq,qi,qj->eij", w * self.alpha, phi, phi)

    def coefficients(self, r):
        r = np.asarray(r, dtype=float)
        if self.profile is None:
            return np.ones_like(r), np.ones_like(r)
        return alpha_beta(self.profile, r)

    def dofs(self):
        p = self.grid.order
        return np.arange(self.grid.n_elements)[:, None] * p + np.arange(p + 1)[None, :]

    def band(self, elem):
        """Element matrices (n_el, p+1, p+1) into LAPACK band storage."""
        p, n = self.grid.order, self.grid.num_dofs
        ab = np.zeros((2 * p + 1, n), dtype=complex)
        idx = self.dofs()
        for i in range(p + 1):
            for j in range(p + 1):
                np.add.at(ab, (p + idx[:, i] - idx[:, j], idx[:, j]), elem[:, i, j])
        return ab

    def system(self, n, s):
        nu2 = n * (n + 1)
        elem = self.k_stiff + nu2 * self.k_ang + self.eps * self.mu * s**2 * self.mass
        return self.band(elem)

    def load(self, values, dvalues=None):
        """int values * phi_i + dvalues * phi_i' over quadrature points."""
        f = np.einsum("eq,eq,qi->ei", self.wq, values, self.phi)
        if dvalues is not None:
            f = f + np.einsum("eq,eq,eqi->ei", self.wq, dvalues, self.dphi)
        out = np.zeros(self.grid.num_dofs, dtype=complex)
        np.add.at(out, self.dofs(), f)
        return out

    def evaluate(self, coeffs, r, derivative=False):
        """u(r) (or u'(r)) from nodal values; the last axis of coeffs is dofs."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        br = self.grid.breaks
        if np.any(r < br[0] - 1e-12) or np.any(r > br[-1] + 1e-12):
            raise ValueError("evaluation radius outside the grid")
        e = np.clip(np.searchsorted(br, r, side="right") - 1, 0, len(br) - 2)
        lo, hi = br[e], br[e + 1]
        xi = 2 * (r - lo) / (hi - lo) - 1
        val, der = lagrange_basis(self.ref_nodes, xi)
        basis = der * (2 / (hi - lo))[:, None] if derivative else val
        local = np.take(coeffs, self.dofs()[e], axis=-1)  # (..., npts, p+1)
        return np.einsum("...ij,ij->...i", local, basis)


def band_matvec(ab, x, p):
    n = ab.shape[1]
    y = np.zeros(n, dtype=complex)
    for k in range(-p, p + 1):
        diag = ab[p - k]  # A[i, i+k] stored at ab[p - k, i + k]
        if k >= 0:
            y[: n - k] += diag[k:] * x[k:]
        else:
            y[-k:] += diag[: n + k] * x[: n + k]
    return y


def _pin(ab, rhs, i, value, p):
    """Impose u_i = value on a symmetric band system, keeping symmetry."""
    n = ab.shape[1]
    for k in range(-p, p + 1):
        j = i + k
        if 0 <= j < n:
            rhs[j] -= ab[p + j - i, i] * value  # column i entry A[j, i]
            ab[p + j - i, i] = 0
            ab[p + i - j, j] = 0
    ab[p, i] = 1
    rhs[i] = value


@dataclass
class ModalBVP:
    """Radial problem for one (mode, polarization, s).

    ``rhs`` is the load vector of the scaled form; ``dirichlet`` maps dof
    index to prescribed value; ``robin`` is (dof, lam) for u' = lam u.
    """

    mode: ModeIndex
    polarization: str
    s: complex
    rhs: np.ndarray
    dirichlet: dict = field(default_factory=dict)
    robin: tuple = None
    bc_inner: str = "pec"
    bc_outer: str = "pec"


@dataclass
class RadialSolution:
    mode: ModeIndex
    polarization: str
    s: complex
    values: np.ndarray
    fem: RadialFEM = field(repr=False, default=None)
    source: object = field(repr=False, default=None)
    residual: float = 0.0


def _boundary_dofs(grid):
    return 0, grid.num_dofs - 1


def modal_load(fem, source, term, s):
    """Load vector of a modal source term times the source's Laplace profile."""
    b = source.radial(fem.xq)
    g = source.laplace_time(s)
    r = fem.xq
    if term.polarization == TE:
        return -fem.mu * s * g * term.amplitude * fem.load(r * b)
    # TM: J = amp b U, so J_r = 0 and J_U = amp b
    return -g * term.amplitude * fem.load(np.zeros_like(r), r * b)


def reduce_to_modal_bvps(source, s, phys, grid, fem=None, outer="pec"):
    """One BVP per active source term; zero-amplitude terms are skipped."""
    if fem is None:
        fem = RadialFEM(grid, phys.profile() if outer == "pec" else None, phys.eps, phys.mu)
    r1, r2 = source.support
    if not grid.a < r1 < r2 < phys.R:
        raise ValueError(f"source support [{r1}, {r2}] must lie strictly inside (a, R)")
    out = []
    for term in source.terms:
        if term.amplitude == 0:
            continue
        out.append(make_bvp(fem, term.mode, term.polarization, s, modal_load(fem, source, term, s),
                            phys, outer))
    return out


def make_bvp(fem, mode, pol, s, rhs, phys, outer="pec"):
    first, last = _boundary_dofs(fem.grid)
    dirichlet = {first: 0.0} if pol == TE else {}
    robin = None
    if outer == "pec":
        if pol == TE:
            dirichlet[last] = 0.0
    elif outer == "impedance":
        robin = (last, complex(impedance_coefficient(mode.n, s, fem.grid.outer, phys.eps, phys.mu)))
    else:
        raise ValueError(f"unknown outer condition {outer!r}")
    return ModalBVP(mode, pol, s, rhs, dirichlet, robin, "pec", outer)


def assemble_and_solve(bvp, fem, source=None, tol=1e-10):
    p = fem.grid.order
    ab = fem.system(bvp.mode.n, bvp.s)
    if bvp.robin is not None:
        dof, lam = bvp.robin
        alpha_end = fem.coefficients(fem.grid.outer)[0]
        ab[p, dof] -= lam / alpha_end
    full = ab.copy()
    rhs = np.array(bvp.rhs, dtype=complex)
    for dof, val in bvp.dirichlet.items():
        _pin(ab, rhs, dof, val, p)
    if not np.any(rhs) and not any(bvp.dirichlet.values()):
        return RadialSolution(bvp.mode, bvp.polarization, bvp.s, np.zeros_like(rhs), fem, source)
    try:
        u = solve_banded((p, p), ab, rhs, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular radial system for {bvp.mode} {bvp.polarization} s={bvp.s}") from exc
    res = np.linalg.norm(band_matvec(ab, u, p) - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not res <= tol:
        raise SolverError(f"residual {res:.2e} above {tol:.0e} for {bvp.mode} s={bvp.s}")
    sol = RadialSolution(bvp.mode, bvp.polarization, bvp.s, u, fem, source, res)
    sol.matrix = full
    return sol


def solve_layer_problem(xi, s, phys, grid, fem=None):
    """Source-free layer problem with tangential E = xi on the outer sphere.

    ``xi`` holds the (U, V) coefficients of the tangential field itself.  The
    inner end R carries the PEC-type condition.  Returns one TE and one
    TM solution per mode with nonzero data.
    """
    if fem is None:
        fem = RadialFEM(grid, phys.profile(), phys.eps, phys.mu)
    rho = grid.outer
    first, last = _boundary_dofs(grid)
    out = {}
    for k, idx in enumerate(xi.modes):
        a_k, b_k = xi.a[k], xi.b[k]
        if b_k != 0:
            bvp = ModalBVP(idx, TE, s, np.zeros(grid.num_dofs, complex), {first: 0.0, last: rho * b_k})
            out[(idx, TE)] = assemble_and_solve(bvp, fem)
        if a_k != 0:
            rhs = np.zeros(grid.num_dofs, complex)
            # TM: alpha^-1 w'(rho) = -eps s rho E_U(rho)
            rhs[last] = -phys.eps * s * rho * a_k
            bvp = ModalBVP(idx, TM, s, rhs, {}, None, "pec", "neumann")
            out[(idx, TM)] = assemble_and_solve(bvp, fem)
    return out


def reconstruct_fields(sol, r, phys, source_term=None):
    """Physical (E, H) coefficients at radii r for one mode.

    Returns a dict with keys E_r, E_U, E_V, H_r, H_U, H_V (arrays over r);
    the r-components multiply Y e_r, the others U and V.
    """
    fem, s = sol.fem, sol.s
    r = np.atleast_1d(np.asarray(r, dtype=float))
    u = fem.evaluate(sol.values, r)
    du = fem.evaluate(sol.values, r, derivative=True)
    alpha, beta = fem.coefficients(r)
    rt = r * beta
    nu = sol.mode.nu
    eps, mu = phys.eps, phys.mu
    zero = np.zeros_like(u)
    if sol.polarization == TE:
        return dict(E_r=zero, E_U=zero, E_V=u / r,
                    H_r=alpha * nu * u / (mu * s * rt**2), H_U=du / (alpha * mu * s * r), H_V=zero)
    J_U = zero
    if sol.source is not None and source_term is not None:
        J_U = source_term.amplitude * sol.source.radial(r) * sol.source.laplace_time(s)
    return dict(E_r=-alpha * nu * u / (eps * s * rt**2), E_U=-du / (alpha * eps * s * r) - J_U / (eps * s),
                E_V=zero, H_r=zero, H_U=zero, H_V=u / r)


def sesquilinear_energy(fem, v, n, s):
    """sum conj(v_i) A_ij v_j together with ||v'||^2 and ||v||^2."""
    form = np.vdot(v, band_matvec(fem.system(n, s), v, fem.grid.order))
    dv = fem.evaluate(v, fem.xq.ravel(), derivative=True)
    vv = fem.evaluate(v, fem.xq.ravel())
    w = fem.wq.ravel()
    return form, float(np.sum(w * abs(dv) ** 2)), float(np.sum(w * abs(vv) ** 2))
