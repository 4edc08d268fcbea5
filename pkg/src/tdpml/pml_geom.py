"""Absorption profile, real radial stretching and the PML medium matrices."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PMLProfile:
    """Layer R < r < rho with absorption sigma0 ((r - R)/d)**m.

    ``s1`` is the stretching parameter: the layer stretches radii by
    ``1 + sigma/s1``.  ``c0`` is the admissible ratio rho/d.
    """

    R: float
    rho: float
    sigma0: float
    m: int = 1
    s1: float = 0.25
    c0: float = 10.0

    def __post_init__(self):
        if not 0 < self.R < self.rho:
            raise ValueError("need 0 < R < rho")
        if self.d < 1:
            raise ValueError(f"layer thickness d={self.d} below 1")
        if self.rho > self.c0 * self.d:
            raise ValueError(f"rho/d = {self.rho / self.d:.3g} exceeds c0={self.c0}")
        if self.sigma0 < 0 or self.m < 1 or self.s1 <= 0:
            raise ValueError("need sigma0 >= 0, m >= 1, s1 > 0")

    @property
    def d(self):
        return self.rho - self.R


def sigma(profile, r):
    r = np.asarray(r, dtype=float)
    x = np.clip((r - profile.R) / profile.d, 0.0, 1.0)
    return profile.sigma0 * x**profile.m


def sigma_hat(profile, r):
    """(1/r) int_R^r sigma, in closed form; defined for r >= R."""
    r = np.asarray(r, dtype=float)
    if np.any(r < profile.R - 1e-14 * profile.R):
        raise ValueError("sigma_hat is defined for r >= R only")
    R, rho, m, s0 = profile.R, profile.rho, profile.m, profile.sigma0
    inside = s0 / (m + 1) * (r - R) / r * (np.clip(r - R, 0, None) / (rho - R)) ** m
    outside = s0 * ((m + 1) * r - m * rho - R) / ((m + 1) * r)
    return np.where(r <= rho, inside, outside)


def _sigma_hat_all(profile, r):
    r = np.asarray(r, dtype=float)
    return np.where(r <= profile.R, 0.0, sigma_hat(profile, np.maximum(r, profile.R)))


def alpha_beta(profile, r):
    """alpha = 1 + sigma/s1 and beta = r_tilde / r = 1 + sigma_hat/s1."""
    alpha = 1.0 + sigma(profile, r) / profile.s1
    beta = 1.0 + _sigma_hat_all(profile, r) / profile.s1
    return alpha, beta


def stretch_radius(profile, r):
    r = np.asarray(r, dtype=float)
    return r * alpha_beta(profile, r)[1]


def stretch_point(profile, x):
    """Cartesian stretched point x_tilde = r_tilde x / |x|."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    return x * alpha_beta(profile, r)[1]


def medium_matrices(profile, r):
    """Diagonals of A, B and BA in the (e_r, e_theta, e_phi) frame."""
    a, b = alpha_beta(profile, r)
    A = np.stack([b**-2, 1 / (a * b), 1 / (a * b)], axis=-1)
    B = np.stack([a, b, b], axis=-1)
    return A, B, A * B


def sqrt_re_pos(z):
    """Square root with Re > 0 off the cut (-inf, 0]; inputs on the cut raise."""
    z = np.asarray(z, dtype=complex)
    on_cut = (z.imag == 0) & (z.real <= 0)
    if np.any(on_cut):
        raise ValueError("square root requested on the branch cut (-inf, 0]")
    return np.exp(0.5 * np.log(z))


def complex_distance(s, x_stretched, y):
    """rho_s = (s^2 |x_tilde - y|^2)^(1/2) on the Re > 0 branch."""
    s = np.asarray(s, dtype=complex)
    if np.any(s.real <= 0):
        raise ValueError("complex distance needs Re(s) > 0")
    diff = np.asarray(x_stretched, dtype=float) - np.asarray(y, dtype=float)
    dist2 = np.sum(diff * diff, axis=-1)
    if np.any(dist2 == 0):
        raise ZeroDivisionError("complex distance is singular at x_tilde = y")
    return sqrt_re_pos(s**2 * dist2)


def re_sqrt_lower_bound(z1, z2, z3):
    """(Re sqrt(z1^2+z2^2+z3^2), |a.b| / |b|) for z_j = a_j + i b_j."""
    z = np.stack(np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (z1, z2, z3))))
    a, b = z.real, z.imag
    bb = np.sum(b * b, axis=0)
    if np.any(bb <= 0):
        raise ValueError("imaginary parts must not all vanish")
    lhs = sqrt_re_pos(np.sum(z * z, axis=0)).real
    rhs = np.abs(np.sum(a * b, axis=0)) / np.sqrt(bb)
    return lhs, rhs
