"""Spherical Hankel functions of complex argument and (vector) spherical harmonics.

Harmonics are orthonormal on the unit sphere and carry the Condon-Shortley
phase.  The tangential fields ``U`` and ``V`` do not depend on the sphere
radius; surface integrals over a sphere of radius ``R`` pick up ``R**2``.
"""
from dataclasses import dataclass
from math import factorial, pi, sqrt

import numpy as np
from scipy.special import lpmv


@dataclass(frozen=True, order=True)
class ModeIndex:
    n: int
    m: int

    def __post_init__(self):
        if self.n < 1 or abs(self.m) > self.n:
            raise ValueError(f"invalid mode index (n={self.n}, m={self.m})")

    @property
    def nu(self) -> float:
        """sqrt(n(n+1)), the weight that recurs in every modal formula."""
        return sqrt(self.n * (self.n + 1))


@dataclass(frozen=True)
class SphericalDirection:
    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= pi:
            raise ValueError(f"theta={self.theta} outside [0, pi]")

    def unit_vectors(self):
        """Return (e_r, e_theta, e_phi) as Cartesian 3-vectors."""
        return spherical_basis(self.theta, self.phi)

    @classmethod
    def from_cartesian(cls, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        theta = float(np.arccos(np.clip(x[2] / r, -1.0, 1.0)))
        phi = float(np.arctan2(x[1], x[0]) % (2 * pi))
        return cls(theta, phi)


def modes_up_to(n_max):
    """All ModeIndex values with 1 <= n <= n_max, ordered by (n, m)."""
    return [ModeIndex(n, m) for n in range(1, n_max + 1) for m in range(-n, n + 1)]


def spherical_basis(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    e_r = np.stack([st * cp, st * sp, ct], axis=-1)
    e_t = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_p = np.stack([-sp, cp, np.zeros_like(st * cp)], axis=-1)
    return e_r, e_t, e_p


# --------------------------------------------------------------------------
# spherical Hankel functions
# --------------------------------------------------------------------------

def sph_hankel1_all(n_max, z):
    """h_0^(1)(z), ..., h_{n_max}^(1)(z) stacked along the first axis.

    Closed forms for orders 0 and 1, then upward recurrence.  On Im z >= 0
    the recurrence only amplifies rounding by about exp(2 Im z), which stays
    below 1e6 for every argument the solver produces.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ZeroDivisionError("spherical Hankel function is singular at z = 0")
    out = np.empty((n_max + 1,) + z.shape, dtype=complex)
    e = np.exp(1j * z)
    out[0] = -1j * e / z
    if n_max >= 1:
        out[1] = -e * (z + 1j) / z**2
    for n in range(1, n_max):
        out[n + 1] = (2 * n + 1) / z * out[n] - out[n - 1]
    return out


def sph_hankel1(n, z):
    if n < 0:
        raise ValueError("order must be non-negative")
    return sph_hankel1_all(max(n, 1), z)[n]


def sph_hankel1_deriv(n, z):
    """d/dz h_n^(1)(z) from h_n' = h_{n-1} - (n+1)/z h_n (h_0' = -h_1)."""
    h = sph_hankel1_all(max(n, 1), z)
    if n == 0:
        return -h[1]
    return h[n - 1] - (n + 1) / np.asarray(z) * h[n]


def z_comb(n, z):
    """z_n(z) = h_n(z) + z h_n'(z) = z h_{n-1}(z) - n h_n(z)."""
    if n < 1:
        raise ValueError("z_comb needs n >= 1")
    z = np.asarray(z, dtype=complex)
    h = sph_hankel1_all(n, z)
    return z * h[n - 1] - n * h[n]


def hankel_ratio(n, z):
    """z_n(z) / h_n(z), the radial log-derivative factor of r h_n(kr)."""
    z = np.asarray(z, dtype=complex)
    h = sph_hankel1_all(n, z)
    return z * h[n - 1] / h[n] - n


# --------------------------------------------------------------------------
# scalar and vector spherical harmonics
# --------------------------------------------------------------------------

def _norm(n, m):
    return sqrt((2 * n + 1) / (4 * pi) * factorial(n - m) / factorial(n + m))


def _legendre(m, n, x):
    if m < 0 or m > n or n < 0:
        return np.zeros_like(x)
    return lpmv(m, n, x)


def sph_harmonic(idx, theta, phi):
    """Y_n^m(theta, phi), orthonormal on the unit sphere."""
    n, m = idx.n, idx.m
    if m < 0:
        return (-1) ** m * np.conj(sph_harmonic(ModeIndex(n, -m), theta, phi))
    theta = np.asarray(theta, dtype=float)
    return _norm(n, m) * _legendre(m, n, np.cos(theta)) * np.exp(1j * m * np.asarray(phi))


def _angular_parts(n, m, theta, phi):
    """(d/dtheta Y, (1/sin theta) d/dphi Y) for m >= 0, finite at the poles."""
    x = np.cos(np.asarray(theta, dtype=float))
    if m == 0:
        dtheta = _legendre(1, n, x)
        msin = np.zeros_like(x)
    else:
        dtheta = 0.5 * (_legendre(m + 1, n, x) - (n + m) * (n - m + 1) * _legendre(m - 1, n, x))
        msin = -0.5 * (_legendre(m + 1, n - 1, x) + (n + m - 1) * (n + m) * _legendre(m - 1, n - 1, x))
    phase = _norm(n, m) * np.exp(1j * m * np.asarray(phi))
    return dtheta * phase, 1j * msin * phase


def vector_harmonics(idx, theta, phi):
    """Tangential harmonics U = grad_S2 Y / nu and V = e_r x U (Cartesian).

    Array inputs broadcast; the trailing axis of each result holds the
    Cartesian components.
    """
    n, m = idx.n, idx.m
    if m < 0:
        U, V = vector_harmonics(ModeIndex(n, -m), theta, phi)
        sign = (-1) ** m
        return sign * np.conj(U), sign * np.conj(V)
    _, e_t, e_p = spherical_basis(theta, phi)
    dth, dph = _angular_parts(n, m, theta, phi)
    nu = idx.nu
    U = (dth[..., None] * e_t + dph[..., None] * e_p) / nu
    V = (dth[..., None] * e_p - dph[..., None] * e_t) / nu
    return U, V


def sphere_quadrature(order):
    """Gauss-Legendre in cos(theta) times trapezoid in phi on the unit sphere.

    Returns (theta, phi, weights) as flat arrays; exact for band-limited
    products up to degree ``2*order - 1`` in theta and ``2*order - 1`` in phi.
    """
    x, wx = np.polynomial.legendre.leggauss(order)
    nphi = 2 * order
    phi = 2 * pi * np.arange(nphi) / nphi
    theta = np.arccos(x)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(wx, np.full(nphi, 2 * pi / nphi))
    return T.ravel(), P.ravel(), W.ravel()
