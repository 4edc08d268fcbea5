"""Free and stretched fundamental solutions, dyadic Green's functions and
the layer-potential extension of tangential data into the PML.

Derivatives of Phi are written in the factor form

    d Phi / d y_j       = s P1_j + P0_j
    d2 Phi / dy_i dy_j  = s^2 Q2_ij + s Q1_ij + Q0_ij

with D = x_tilde - y (real, because the stretching is real) so that the
complex distance is rho_s = s |D|.  The Hessian part of G is curl free, so
every curl of G reduces to curls of Phi I.
"""
from dataclasses import dataclass

import numpy as np

from .calderon import TangentialTrace
from .pml_geom import complex_distance, sigma_hat, stretch_point
from .specfun import sphere_quadrature, spherical_basis

SurfaceDensity = TangentialTrace


class QuadratureError(ArithmeticError):
    pass


def _diff(x, y):
    D = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    dist = np.linalg.norm(D, axis=-1)
    if np.any(dist == 0):
        raise ZeroDivisionError("Green's function is singular at x = y")
    return D, dist


def phi_free(s, x, y, eps=1.0, mu=1.0):
    s = np.asarray(s, dtype=complex)
    if np.any(s.real <= 0):
        raise ValueError("need Re(s) > 0")
    _, dist = _diff(x, y)
    return np.exp(-np.sqrt(eps * mu) * s * dist) / (4 * np.pi * dist)


def phi_stretched(s, x_tilde, y, eps=1.0, mu=1.0):
    rho_s = complex_distance(s, x_tilde, y)
    return np.exp(-np.sqrt(eps * mu) * rho_s) / (4 * np.pi * rho_s / s)


def p_factors(s, x_tilde, y, eps=1.0, mu=1.0):
    """(P1, P0), each (..., 3), with d Phi / d y = s P1 + P0."""
    kappa = np.sqrt(eps * mu)
    D, dist = _diff(x_tilde, y)
    phi = phi_stretched(s, x_tilde, y, eps, mu)[..., None]
    P1 = kappa * D / dist[..., None] * phi
    P0 = D / dist[..., None] ** 2 * phi
    return P1, P0


def q_factors(s, x_tilde, y, eps=1.0, mu=1.0):
    """(Q2, Q1, Q0), each (..., 3, 3), with Hessian_y Phi = s^2 Q2 + s Q1 + Q0."""
    kappa = np.sqrt(eps * mu)
    D, dist = _diff(x_tilde, y)
    P1, P0 = p_factors(s, x_tilde, y, eps, mu)
    phi = phi_stretched(s, x_tilde, y, eps, mu)[..., None, None]
    dd = dist[..., None, None]
    Dj = D[..., None, :]
    outer = D[..., :, None] * Dj
    eye = np.eye(3)
    Q2 = kappa * Dj / dd * P1[..., :, None]
    Q1 = Dj / dd**2 * P1[..., :, None] + kappa * Dj / dd * P0[..., :, None] \
        + kappa * (outer - eye * dd**2) / dd**3 * phi
    Q0 = Dj / dd**2 * P0[..., :, None] + (2 * outer - eye * dd**2) / dd**4 * phi
    return Q2, Q1, Q0


def cross_matrix(v):
    """Matrix whose column j is v x e_j."""
    v = np.asarray(v)
    z = np.zeros_like(v[..., 0])
    return np.stack([
        np.stack([z, -v[..., 2], v[..., 1]], axis=-1),
        np.stack([v[..., 2], z, -v[..., 0]], axis=-1),
        np.stack([-v[..., 1], v[..., 0], z], axis=-1),
    ], axis=-2)


@dataclass
class GreenSample:
    value: np.ndarray
    curl_x: np.ndarray
    curl_y: np.ndarray
    curl_x_curl_y: np.ndarray
    curl_y_curl_y: np.ndarray
    curl_x_curl_y_curl_y: np.ndarray
    phi: np.ndarray = None
    grad_y: np.ndarray = None
    hessian: np.ndarray = None


def dyadic_green(s, x, y, eps=1.0, mu=1.0, profile=None, stretched=False):
    """G = Phi I + k^-2 Hess_y Phi and its curls; x is physical, stretched if asked.

    Curls in x act on the stretched coordinate x_tilde.
    """
    s = complex(s)
    x_t = stretch_point(profile, x) if (stretched and profile is not None) else np.asarray(x, float)
    k2 = -eps * mu * s * s
    phi = phi_stretched(s, x_t, y, eps, mu)
    P1, P0 = p_factors(s, x_t, y, eps, mu)
    Q2, Q1, Q0 = q_factors(s, x_t, y, eps, mu)
    grad = s * P1 + P0
    hess = s * s * Q2 + s * Q1 + Q0
    G = phi[..., None, None] * np.eye(3) + hess / k2
    cy = cross_matrix(grad)
    return GreenSample(value=G, curl_x=-cy, curl_y=cy, curl_x_curl_y=-k2 * G, curl_y_curl_y=k2 * G,
                       curl_x_curl_y_curl_y=-k2 * cy, phi=phi, grad_y=grad, hessian=hess)


def default_quadrature_order(n_max):
    return 2 * n_max + 8


def _potential(p, q, x, s, phys, profile, order):
    R, eps, mu = phys.R, phys.eps, phys.mu
    theta, phi, w = sphere_quadrature(order)
    y = R * spherical_basis(theta, phi)[0]
    w = w * R * R
    x_t = stretch_point(profile, x) if profile is not None else np.asarray(x, float)
    k2 = -eps * mu * s * s
    ph = phi_stretched(s, x_t, y, eps, mu)
    P1, P0 = p_factors(s, x_t, y, eps, mu)
    Q2, Q1, Q0 = q_factors(s, x_t, y, eps, mu)
    grad = s * P1 + P0
    hess = s * s * Q2 + s * Q1 + Q0
    qv = q.evaluate(theta, phi)
    pv = p.evaluate(theta, phi)
    single = ph[:, None] * qv + np.einsum("qij,qj->qi", hess, qv) / k2
    double = np.cross(pv, grad)
    return -np.sum(w[:, None] * (single + double), axis=0)


def layer_potentials(p, q, x, s, phys, profile=None, order=None, tol=1e-10, max_order=256):
    """Extension E(p, q)(x) = -SL(q)(x) - DL(p)(x) by product quadrature on |y| = R.

    ``p`` and ``q`` are the rotated traces E x n and curl E x n.  A fixed
    ``order`` is used as given.  Otherwise the order starts at 2 n_max + 8 and
    doubles until two successive values agree to ``tol``; the kernel is
    nearly singular for x close to the sphere, so mode content alone does
    not fix the order.
    """
    if np.linalg.norm(x) <= phys.R * (1 + 1e-9):
        raise ValueError("evaluation point must lie outside the sphere of radius R")
    s = complex(s)
    if order is not None:
        return _potential(p, q, x, s, phys, profile, order)
    order = default_quadrature_order(max(p.n_max, q.n_max))
    val = _potential(p, q, x, s, phys, profile, order)
    while 2 * order <= max_order:
        order *= 2
        new = _potential(p, q, x, s, phys, profile, order)
        if np.linalg.norm(new - val) <= tol * max(np.linalg.norm(new), 1e-300):
            return new
        val = new
    raise QuadratureError(f"no convergence up to order {max_order} at |x|={np.linalg.norm(x):.4g}")


# ---- decay certification -------------------------------------------------

def decay_shapes(s, phys, profile):
    """Right-hand shapes (without constants) of the Green's-function bounds."""
    s1, d, sig0 = profile.s1, profile.d, profile.sigma0
    kappa = np.sqrt(phys.eps * phys.mu)
    damp = np.exp(-kappa * profile.rho * sigma_hat(profile, profile.rho))
    g = 1 + sig0 / s1
    a = abs(s)
    return {
        "value": s1**-2 / d * g**2 * damp,
        "curl_x": (1 + a) * g / d * damp,
        "curl_y": (1 + a) * g / d * damp,
        "curl_x_curl_y": (1 + a**2) * g**2 / d * damp,
        "curl_y_curl_y": (1 + a**2) * g**2 / d * damp,
        "curl_x_curl_y_curl_y": (1 + a**3) * g**3 / d * damp,
    }


def random_sphere_points(rng, n, radius):
    v = rng.standard_normal((n, 3))
    return radius * v / np.linalg.norm(v, axis=1, keepdims=True)


def green_decay_samples(phys, profile, s_values, n_samples, rng):
    """Sample x on |x| = rho, y on |y| = R and s from ``s_values``.

    Returns arrays of the complex-distance quantities and, per Green's
    quantity, the ratio |.| / shape (Frobenius norm).
    """
    x = random_sphere_points(rng, n_samples, profile.rho)
    y = random_sphere_points(rng, n_samples, phys.R)
    s = np.asarray(s_values)[rng.integers(0, len(s_values), n_samples)]
    x_t = stretch_point(profile, x)
    rho_s = complex_distance(s, x_t, y)
    out = {"abs_rho_over_s": np.abs(rho_s / s), "re_rho": rho_s.real,
           "rho_sigma_hat": profile.rho * float(sigma_hat(profile, profile.rho)), "d": profile.d}
    ratios = {k: np.empty(n_samples) for k in decay_shapes(1.0, phys, profile)}
    for i in range(n_samples):
        g = dyadic_green(s[i], x_t[i], y[i], phys.eps, phys.mu)
        shapes = decay_shapes(s[i], phys, profile)
        for key in ratios:
            ratios[key][i] = np.linalg.norm(getattr(g, key)) / shapes[key]
    out["ratios"] = ratios
    return out


def extension_shape(s, phys, profile, p, q):
    """Shape of the bound on |E(p, q)| on the outer sphere, with Div norms of p and q."""
    from .calderon import div_norm
    s1, d = profile.s1, profile.d
    kappa = np.sqrt(phys.eps * phys.mu)
    damp = np.exp(-kappa * profile.rho * sigma_hat(profile, profile.rho))
    a = abs(s)
    return s1**-2 * np.sqrt(d) * (1 + profile.sigma0 / s1) ** 2 * damp * (
        (1 + a) * div_norm(q) + (1 + a**2) * div_norm(p))
