"""Electric-to-magnetic map on a sphere, trace norms and the exterior series.

A tangential field on the sphere is stored by its coefficients in the
(U, V) harmonic basis, ``sum a U + b V``.  The duality pairing between the
Div and Curl trace spaces is the coefficient sum ``sum f_a conj(g_a) +
f_b conj(g_b)`` (conjugate-linear second slot, unit-sphere measure).
"""
from dataclasses import dataclass, field

import numpy as np

from .specfun import ModeIndex, hankel_ratio, modes_up_to, sph_hankel1_all, sph_harmonic, \
    spherical_basis, vector_harmonics, z_comb


class SingularModeError(ArithmeticError):
    pass


@dataclass
class TangentialTrace:
    n_max: int
    a: np.ndarray = None
    b: np.ndarray = None

    def __post_init__(self):
        size = self.n_max * (self.n_max + 2)
        self.a = np.zeros(size, complex) if self.a is None else np.asarray(self.a, dtype=complex)
        self.b = np.zeros(size, complex) if self.b is None else np.asarray(self.b, dtype=complex)
        if self.a.shape != (size,) or self.b.shape != (size,):
            raise ValueError(f"coefficient arrays must have length {size}")

    @property
    def modes(self):
        return modes_up_to(self.n_max)

    @property
    def nu(self):
        return np.array([idx.nu for idx in self.modes])

    @property
    def orders(self):
        return np.array([idx.n for idx in self.modes])

    @classmethod
    def single(cls, n_max, idx, a=0.0, b=0.0):
        tr = cls(n_max)
        k = mode_slot(idx)
        tr.a[k], tr.b[k] = a, b
        return tr

    @classmethod
    def random(cls, n_max, rng):
        size = n_max * (n_max + 2)
        draw = lambda: rng.standard_normal(size) + 1j * rng.standard_normal(size)
        return cls(n_max, draw(), draw())

    def evaluate(self, theta, phi):
        """Cartesian field values sum a U + b V at the given directions."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape + (3,), complex)
        for k, idx in enumerate(self.modes):
            if self.a[k] == 0 and self.b[k] == 0:
                continue
            U, V = vector_harmonics(idx, theta, phi)
            out += self.a[k] * U + self.b[k] * V
        return out


def mode_slot(idx):
    """Flat position of (n, m) in coefficient arrays ordered by (n, m)."""
    return idx.n * idx.n - 1 + idx.m + idx.n


def div_norm(trace):
    nu = trace.nu
    return float(np.sqrt(np.sum(nu * abs(trace.a) ** 2 + abs(trace.b) ** 2 / nu)))


def curl_norm(trace):
    nu = trace.nu
    return float(np.sqrt(np.sum(abs(trace.a) ** 2 / nu + nu * abs(trace.b) ** 2)))


def pairing(f, g):
    return complex(np.sum(f.a * np.conj(g.a) + f.b * np.conj(g.b)))


def wavenumber(s, eps, mu):
    return 1j * np.sqrt(eps * mu) * np.asarray(s, dtype=complex)


def etm_factors(n, s, R, eps=1.0, mu=1.0):
    """Per-mode multipliers (f_a, f_b) of the EtM map: a -> f_a a, b -> f_b b."""
    s = np.asarray(s, dtype=complex)
    if np.any(s.real <= 0):
        raise ValueError("EtM map needs Re(s) > 0")
    ratio = hankel_ratio(n, wavenumber(s, eps, mu) * R)  # z_n(kR) / h_n(kR)
    if np.any(~np.isfinite(ratio)) or np.any(ratio == 0):
        raise SingularModeError(f"degenerate Hankel data for n={n}")
    return -eps * s * R / ratio, -ratio / (mu * s * R)


def impedance_coefficient(n, s, R, eps=1.0, mu=1.0):
    """u'(R)/u(R) for u = r h_n(kr): the outgoing-wave Robin coefficient."""
    return hankel_ratio(n, wavenumber(s, eps, mu) * R) / R


def etm_apply(trace, s, phys):
    out = TangentialTrace(trace.n_max)
    orders = trace.orders
    for n in np.unique(orders):
        fa, fb = etm_factors(int(n), s, phys.R, phys.eps, phys.mu)
        sel = orders == n
        out.a[sel] = fa * trace.a[sel]
        out.b[sel] = fb * trace.b[sel]
    return out


def etm_norm_bound_check(trace, s, phys):
    """(||B trace||_Div^2, (|s|^2 + |s|^-2) ||trace||_Curl^2)."""
    lhs = div_norm(etm_apply(trace, s, phys)) ** 2
    rhs = (abs(s) ** 2 + abs(s) ** -2) * curl_norm(trace) ** 2
    return lhs, rhs


def exterior_series(trace, s, r, theta, phi, phys, stretched_radius=None):
    """Outgoing (E, H) at (r, theta, phi) whose tangential E on r = R is ``trace``.

    With ``stretched_radius`` the radial factors are evaluated at r_tilde,
    which gives the field of the stretched exterior problem.
    """
    R, eps, mu = phys.R, phys.eps, phys.mu
    rr = r if stretched_radius is None else stretched_radius
    if rr < R * (1 - 1e-14):
        raise ValueError("exterior series needs r >= R")
    k = complex(wavenumber(s, eps, mu))
    n_max = trace.n_max
    h_r = sph_hankel1_all(n_max, k * rr)
    h_R = sph_hankel1_all(n_max, k * R)
    e_r = spherical_basis(theta, phi)[0]
    E = np.zeros(3, complex)
    H = np.zeros(3, complex)
    for j, idx in enumerate(trace.modes):
        a, b = trace.a[j], trace.b[j]
        if a == 0 and b == 0:
            continue
        n, nu = idx.n, idx.nu
        z_r = k * rr * h_r[n - 1] - n * h_r[n]
        z_R = k * R * h_R[n - 1] - n * h_R[n]
        U, V = vector_harmonics(idx, theta, phi)
        Y = sph_harmonic(idx, theta, phi)
        E += (R * a * z_r / (rr * z_R)) * U + (b * h_r[n] / h_R[n]) * V \
            + (R * a * nu * h_r[n] / (rr * z_R)) * Y * e_r
        H += (b * z_r / (mu * s * rr * h_R[n])) * U - (eps * s * R * a * h_r[n] / z_R) * V \
            + (b * nu * h_r[n] / (mu * s * rr * h_R[n])) * Y * e_r
    return E, H
