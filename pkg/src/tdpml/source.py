"""Finite-mode current sources J = amp b(r) g(t) W_nm with W = V (TE) or U (TM)."""
from dataclasses import dataclass
from math import comb

import numpy as np

from .specfun import ModeIndex


@dataclass(frozen=True)
class SourceTerm:
    mode: ModeIndex
    polarization: str
    amplitude: complex = 1.0

    def __post_init__(self):
        if self.polarization not in ("TE", "TM"):
            raise ValueError(f"polarization must be TE or TM, got {self.polarization!r}")


@dataclass(frozen=True)
class ModalSource:
    """Radial bump ((r-r1)(r2-r))^4 scaled to peak 1, time pulse sin^8(pi t/T0)."""

    terms: tuple
    r1: float = 0.6
    r2: float = 0.9
    T0: float = 1.5

    def __post_init__(self):
        if not 0 < self.r1 < self.r2:
            raise ValueError("need 0 < r1 < r2")
        if self.T0 <= 0:
            raise ValueError("T0 must be positive")

    @property
    def support(self):
        return self.r1, self.r2

    @property
    def n_max(self):
        return max((t.mode.n for t in self.terms), default=1)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        half = (self.r2 - self.r1) / 2
        inside = (r > self.r1) & (r < self.r2)
        return np.where(inside, ((r - self.r1) * (self.r2 - r)) ** 4 / half**8, 0.0)

    def time(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t > 0) & (t < self.T0)
        return np.where(inside, np.sin(np.pi * t / self.T0) ** 8, 0.0)

    def time_derivative(self, t):
        t = np.asarray(t, dtype=float)
        w = np.pi / self.T0
        inside = (t > 0) & (t < self.T0)
        return np.where(inside, 8 * w * np.sin(w * t) ** 7 * np.cos(w * t), 0.0)

    def laplace_time(self, s):
        """Exact Laplace transform of the time pulse.

        sin^8 x = 2^-8 sum_j C(8,j) (-1)^j e^{i(8-2j)x}; each exponential
        integrates in closed form over [0, T0].
        """
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        for j in range(9):
            lam = s - 1j * (8 - 2 * j) * np.pi / self.T0
            coef = comb(8, j) * (-1) ** j / 256
            out = out + coef * (-np.expm1(-lam * self.T0)) / lam
        return out

    def terms_for(self, pol):
        return [t for t in self.terms if t.polarization == pol]


def synthesize_source(src_cfg):
    terms = tuple(SourceTerm(ModeIndex(int(n), int(m)), pol, src_cfg.amplitude)
                  for (n, m) in src_cfg.modes for pol in src_cfg.polarizations)
    return ModalSource(terms, src_cfg.r1, src_cfg.r2, src_cfg.T0)
