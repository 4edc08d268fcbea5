import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import sph_harm_y

from tdpml.specfun import (ModeIndex, SphericalDirection, hankel_ratio, modes_up_to, sph_hankel1,
                           sph_hankel1_all, sph_hankel1_deriv, sph_harmonic, sphere_quadrature,
                           spherical_basis, vector_harmonics, z_comb)


def hankel_mp(n, z):
    with mpmath.workdps(40):
        z = mpmath.mpc(z)
        return complex(mpmath.sqrt(mpmath.pi / (2 * z)) * mpmath.hankel1(n + 0.5, z))


@pytest.mark.parametrize("n", [0, 1, 2, 5, 10])
@pytest.mark.parametrize("z", [0.05 + 0.01j, 1.0 + 0.0j, 2.5 + 0.7j, -3.0 + 0.25j, 0.3j - 12.0, 40 + 1j])
def test_hankel_matches_arbitrary_precision(n, z):
    assert sph_hankel1(n, z) == pytest.approx(hankel_mp(n, z), rel=1e-12)


@given(st.floats(-30, 30), st.floats(0.01, 20), st.integers(0, 12))
def test_hankel_upper_half_plane(re, im, n):
    z = complex(re, im)
    assert abs(sph_hankel1(n, z) - hankel_mp(n, z)) <= 1e-11 * abs(hankel_mp(n, z))


def test_hankel_closed_forms():
    z = 1.7 + 0.4j
    assert sph_hankel1(0, z) == pytest.approx(-1j * np.exp(1j * z) / z, rel=1e-15)
    assert sph_hankel1(1, z) == pytest.approx(-np.exp(1j * z) * (z + 1j) / z**2, rel=1e-15)


def test_hankel_zero_argument_raises():
    with pytest.raises(ZeroDivisionError):
        sph_hankel1_all(3, 0.0)


def test_z_comb_is_derivative_of_x_h():
    z, h = 1.3 + 0.9j, 1e-6
    for n in (1, 2, 6):
        fd = ((z + h) * sph_hankel1(n, z + h) - (z - h) * sph_hankel1(n, z - h)) / (2 * h)
        assert z_comb(n, z) == pytest.approx(fd, rel=1e-8)
        assert sph_hankel1_deriv(n, z) == pytest.approx(
            (sph_hankel1(n, z + h) - sph_hankel1(n, z - h)) / (2 * h), rel=1e-8)
        assert hankel_ratio(n, z) == pytest.approx(z_comb(n, z) / sph_hankel1(n, z), rel=1e-13)


def test_mode_index_validation():
    with pytest.raises(ValueError):
        ModeIndex(0, 0)
    with pytest.raises(ValueError):
        ModeIndex(2, 3)
    assert ModeIndex(2, -1).nu == pytest.approx(np.sqrt(6))
    assert len(modes_up_to(4)) == 4 * 6


def test_condon_shortley_phase():
    th, ph = 0.8, 0.3
    y11 = -np.sqrt(3 / (8 * np.pi)) * np.sin(th) * np.exp(1j * ph)
    assert sph_harmonic(ModeIndex(1, 1), th, ph) == pytest.approx(y11, rel=1e-14)


def test_harmonic_matches_scipy():
    th, ph = np.linspace(0.1, 3.0, 7), np.linspace(0.0, 6.0, 7)
    for idx in modes_up_to(5):
        ref = sph_harm_y(idx.n, idx.m, th, ph)
        np.testing.assert_allclose(sph_harmonic(idx, th, ph), ref, rtol=1e-12, atol=1e-14)


def test_scalar_and_vector_orthonormality():
    th, ph, w = sphere_quadrature(14)
    modes = modes_up_to(6)
    Y = np.array([sph_harmonic(i, th, ph) for i in modes])
    np.testing.assert_allclose((Y * w) @ Y.conj().T, np.eye(len(modes)), atol=1e-12)
    UV = [vector_harmonics(i, th, ph) for i in modes]
    U = np.array([u for u, _ in UV])
    V = np.array([v for _, v in UV])
    gram = lambda A, B: np.einsum("aqc,bqc,q->ab", A, B.conj(), w)
    np.testing.assert_allclose(gram(U, U), np.eye(len(modes)), atol=1e-12)
    np.testing.assert_allclose(gram(V, V), np.eye(len(modes)), atol=1e-12)
    np.testing.assert_allclose(gram(U, V), 0, atol=1e-12)


def test_v_is_radial_cross_u_and_tangential():
    th, ph, _ = sphere_quadrature(6)
    e_r = spherical_basis(th, ph)[0]
    for idx in modes_up_to(3):
        U, V = vector_harmonics(idx, th, ph)
        np.testing.assert_allclose(V, np.cross(e_r, U), atol=1e-14)
        np.testing.assert_allclose(np.einsum("qc,qc->q", U, e_r), 0, atol=1e-14)


def test_u_is_surface_gradient():
    th, ph, h = 1.1, 2.3, 1e-6
    _, e_t, e_p = spherical_basis(th, ph)
    for idx in (ModeIndex(1, 0), ModeIndex(3, -2), ModeIndex(4, 3)):
        Y = lambda t, p: sph_harmonic(idx, t, p)
        grad = ((Y(th + h, ph) - Y(th - h, ph)) / (2 * h) * e_t
                + (Y(th, ph + h) - Y(th, ph - h)) / (2 * h * np.sin(th)) * e_p)
        U, _ = vector_harmonics(idx, th, ph)
        np.testing.assert_allclose(U, grad / idx.nu, atol=1e-8)


@pytest.mark.parametrize("theta", [0.0, np.pi])
def test_vector_harmonics_finite_and_continuous_at_poles(theta):
    for idx in modes_up_to(4):
        U0, V0 = vector_harmonics(idx, theta, 0.7)
        near = theta + (1e-7 if theta == 0 else -1e-7)
        U1, V1 = vector_harmonics(idx, near, 0.7)
        assert np.all(np.isfinite(U0)) and np.all(np.isfinite(V0))
        np.testing.assert_allclose(U0, U1, atol=1e-5)
        np.testing.assert_allclose(V0, V1, atol=1e-5)


def test_spherical_direction_round_trip():
    d = SphericalDirection.from_cartesian([1.0, -2.0, 0.5])
    e_r = d.unit_vectors()[0]
    np.testing.assert_allclose(e_r, np.array([1.0, -2.0, 0.5]) / np.linalg.norm([1.0, -2.0, 0.5]))
    with pytest.raises(ValueError):
        SphericalDirection(4.0, 0.0)
