"""Laplace transform of sampled signals and its inversion along Re(s) = s1.

The inverse transform is the trapezoid rule for the Bromwich integral on a
uniformly sampled vertical line.  By Poisson summation the result at time t
is ``sum_k u(t + k P) exp(-s1 k P)`` with period ``P = 2 pi / delta_s2``, so
wrap-around from late times is damped by ``exp(-s1 P)`` per period.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid


class TruncationWarning(UserWarning):
    pass


class SymmetryError(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    t_final: float
    num_steps: int

    def __post_init__(self):
        if self.t_final <= 0 or self.num_steps < 1:
            raise ValueError("need t_final > 0 and num_steps >= 1")

    @property
    def dt(self):
        return self.t_final / self.num_steps

    @property
    def times(self):
        return np.linspace(0.0, self.t_final, self.num_steps + 1)


@dataclass(frozen=True)
class LaplaceContour:
    """Samples s_k = s1 + i (k - N/2) delta_s2 for k = 0..N (N even)."""

    s1: float
    num_freq: int
    delta_s2: float

    def __post_init__(self):
        if self.s1 <= 0:
            raise ValueError("contour abscissa s1 must be positive")
        if self.num_freq <= 0 or self.num_freq % 2:
            raise ValueError("num_freq must be a positive even integer")
        if self.delta_s2 <= 0:
            raise ValueError("delta_s2 must be positive")

    @classmethod
    def for_period(cls, s1, period, num_freq):
        return cls(s1, num_freq, 2 * np.pi / period)

    @property
    def period(self):
        return 2 * np.pi / self.delta_s2

    @property
    def s2(self):
        return (np.arange(self.num_freq + 1) - self.num_freq // 2) * self.delta_s2

    @property
    def points(self):
        return self.s1 + 1j * self.s2

    @property
    def upper_points(self):
        """Points with s2 >= 0; the rest follow by conjugation for real signals."""
        return self.points[self.num_freq // 2:]

    @property
    def weights(self):
        w = np.full(self.num_freq + 1, self.delta_s2)
        w[0] = w[-1] = 0.5 * self.delta_s2
        return w

    def mirror(self, upper_values):
        """Extend data given on ``upper_points`` to the full contour by conjugation."""
        upper_values = np.asarray(upper_values)
        lower = np.conj(upper_values[:0:-1])
        return np.concatenate([lower, upper_values], axis=0)


@dataclass
class TimeSignal:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape[0] != self.grid.num_steps + 1:
            raise ValueError("values length must equal num_steps + 1")


def laplace_forward(sig, s, trunc_tol=1e-8):
    """Trapezoid approximation of int_0^t_final exp(-s t) u(t) dt.

    ``s`` may be an array; extra trailing axes of ``sig.values`` are kept.
    Warns with TruncationWarning when the integrand has not decayed at the
    end of the grid.
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    if np.any(s.real <= 0):
        raise ValueError("Laplace transform needs Re(s) > 0")
    t = sig.grid.times
    u = sig.values
    tail = np.max(np.abs(u[-1])) * np.exp(-s.real.min() * t[-1])
    if tail > trunc_tol:
        warnings.warn(f"Laplace integrand not negligible at t_final ({tail:.2e})", TruncationWarning)
    kernel = np.exp(-np.outer(s, t))
    w = np.full(t.size, sig.grid.dt)
    w[0] = w[-1] = 0.5 * sig.grid.dt
    out = np.tensordot(kernel * w, u, axes=(1, 0))
    return out


def laplace_inverse_contour(freq_values, contour, grid, imag_tol=1e-8, real=True):
    """Invert samples on ``contour`` to a TimeSignal on ``grid``.

    ``freq_values`` has the contour axis first (length num_freq + 1), or only
    the s2 >= 0 half (length num_freq/2 + 1) when the signal is real.
    """
    if contour.delta_s2 * grid.t_final > 2 * np.pi * (1 + 1e-12):
        raise ValueError("contour spacing too coarse for this time grid (delta_s2 * t_final > 2 pi)")
    F = np.asarray(freq_values, dtype=complex)
    half = contour.num_freq // 2 + 1
    t = grid.times
    if F.shape[0] == half:
        # real signal: fold the conjugate half analytically
        s2 = contour.s2[contour.num_freq // 2:]
        # conjugate pairs count twice; s2 = 0 once; the end point carries half weight
        w = np.full(half, 2 * contour.delta_s2)
        w[0] = contour.delta_s2
        w[-1] = contour.delta_s2
        kernel = np.exp(1j * np.outer(t, s2)) * w
        u = np.tensordot(kernel, F, axes=(1, 0)).real
    elif F.shape[0] == contour.num_freq + 1:
        kernel = np.exp(1j * np.outer(t, contour.s2)) * contour.weights
        u = np.tensordot(kernel, F, axes=(1, 0))
        if real:
            scale = max(np.max(np.abs(u)), 1e-300)
            if np.max(np.abs(u.imag)) > imag_tol * scale:
                raise SymmetryError("contour data lacks conjugate symmetry")
            u = u.real
    else:
        raise ValueError("frequency data does not match the contour")
    damp = np.exp(contour.s1 * t) / (2 * np.pi)
    u = u * damp.reshape((-1,) + (1,) * (u.ndim - 1))
    return TimeSignal(grid, u)


def parseval_sides(u_hat, v_hat, contour, u, v, grid):
    """(lhs, rhs) of the Laplace-Parseval identity from given spectra and samples."""
    lhs = np.sum(contour.weights * u_hat * np.conj(v_hat)) / (2 * np.pi)
    rhs = trapezoid(np.exp(-2 * contour.s1 * grid.times) * u * np.conj(v), grid.times)
    return lhs, rhs


def parseval_check(u, v, contour):
    """Both sides of (1/2pi) int u^ conj(v^) ds2 = int exp(-2 s1 t) u conj(v) dt."""
    if u.grid != v.grid:
        raise ValueError("signals must share a time grid")
    if not np.any(u.values) or not np.any(v.values):
        return 0j, 0j
    s = contour.points
    return parseval_sides(laplace_forward(u, s), laplace_forward(v, s), contour,
                          u.values, v.values, u.grid)


def running_integral(sig):
    """Cumulative trapezoid integral int_0^t u."""
    from scipy.integrate import cumulative_trapezoid
    return TimeSignal(sig.grid, cumulative_trapezoid(sig.values, sig.grid.times, axis=0, initial=0))
