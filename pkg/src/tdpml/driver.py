"""End-to-end pipeline: solve along the contour, invert, compare, sweep."""
import csv
import json
import math
import platform
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy
from scipy.integrate import trapezoid

from . import __version__
from .config import ContourConfig, RunConfig
from .pml_geom import stretch_radius
from .pml_solver import TE, TM, RadialFEM, RadialGrid, assemble_and_solve, make_bvp, modal_load
from .source import ModalSource, SourceTerm, synthesize_source
from .xform import LaplaceContour, TimeGrid, laplace_inverse_contour

__all__ = ["ModalSource", "SourceTerm", "synthesize_source", "run_simulation", "convergence_sweep",
           "stability_monitor", "emit_results", "ConvergenceRecord", "SimulationResult"]

COMPONENTS = ("E_r", "E_U", "E_V", "H_r", "H_U", "H_V")
CSV_HEADER = ["d", "sigma0", "N_max", "h", "err_E", "err_H", "bound_shape", "slope_fit"]


class PipelineError(RuntimeError):
    pass


def build_contour(cfg):
    phys, cc = cfg.physical, cfg.contour
    t_final = cc.horizon_factor * phys.T
    s1 = cc.abscissa if cc.abscissa is not None else phys.s1
    delta = 2 * np.pi / t_final
    num_freq = cc.num_freq or 2 * math.ceil(cc.s2_max / delta)
    return LaplaceContour(s1, num_freq, delta), TimeGrid(t_final, cc.num_steps)


def build_grid(cfg):
    phys, gc = cfg.physical, cfg.grid
    profile = phys.profile()
    layer_len = float(stretch_radius(profile, phys.rho)) - phys.R
    n_layer = max(gc.n_layer_min, math.ceil(gc.layer_density * layer_len))
    return RadialGrid.build(phys.a, phys.R, phys.rho, gc.n_inner, n_layer, gc.order, profile, gc.grading)


def validate_source(source, phys):
    r1, r2 = source.support
    if not phys.a < r1 < r2 < phys.R:
        raise PipelineError(f"source support [{r1}, {r2}] not inside (a, R) = ({phys.a}, {phys.R})")
    if not 0 < source.T0 < phys.T:
        raise PipelineError(f"time support [0, {source.T0}] not inside (0, T) with T={phys.T}")


def _fields_at(fem, u, du, r, mode, pol, s, phys, j_u):
    """Physical field coefficients from u, u' (arrays over s x radii)."""
    alpha, beta = fem.coefficients(r)
    rt = r * beta
    nu = mode.nu
    s = s[:, None]
    eps, mu = phys.eps, phys.mu
    zero = np.zeros_like(u)
    if pol == TE:
        return {"E_V": u / r, "H_r": alpha * nu * u / (mu * s * rt**2), "H_U": du / (alpha * mu * s * r),
                "E_r": zero, "E_U": zero, "H_V": zero}
    return {"E_r": -alpha * nu * u / (eps * s * rt**2), "E_U": -du / (alpha * eps * s * r) - j_u / (eps * s),
            "H_V": u / r, "H_r": zero, "H_U": zero, "E_V": zero}


@dataclass
class FrequencyData:
    """Per-mode field coefficients on the upper contour, shape (n_s, n_r)."""

    s: np.ndarray
    r: np.ndarray
    weights: np.ndarray
    fields: dict  # mode -> component -> array


def solve_frequency(cfg, source, contour, outer="pec", region="inner", grid=None):
    """Solve every source term at every upper contour point.

    ``outer="pec"`` is the truncated PML problem on [a, rho]; ``"impedance"``
    puts the exact outgoing condition at the end of the grid.  ``region``
    selects the radii where fields are returned: "inner" for [a, R] or
    "all" for the whole grid.
    """
    phys = cfg.physical
    grid = grid or build_grid(cfg)
    profile = phys.profile() if outer == "pec" else None
    fem = RadialFEM(grid, profile, phys.eps, phys.mu)
    n_el = grid.n_elements if region == "all" else int(np.sum(grid.breaks[1:] <= phys.R + 1e-13))
    r = fem.xq[:n_el].ravel()
    w = fem.wq[:n_el].ravel()
    s_all = contour.upper_points
    j_prof = source.radial(r)
    fields = {}
    for term in source.terms:
        if term.amplitude == 0:
            continue
        vals = np.empty((s_all.size, grid.num_dofs), complex)
        for i, s in enumerate(s_all):
            bvp = make_bvp(fem, term.mode, term.polarization, s, modal_load(fem, source, term, s), phys, outer)
            try:
                vals[i] = assemble_and_solve(bvp, fem).values
            except Exception as exc:
                raise PipelineError(f"solve failed for {term.mode} {term.polarization} at s={s}: {exc}") from exc
        u = fem.evaluate(vals, r)
        du = fem.evaluate(vals, r, derivative=True)
        j_u = term.amplitude * j_prof[None, :] * source.laplace_time(s_all)[:, None] \
            if term.polarization == TM else 0.0
        comp = _fields_at(fem, u, du, r, term.mode, term.polarization, s_all, phys, j_u)
        acc = fields.setdefault(term.mode, {c: np.zeros_like(u) for c in COMPONENTS})
        for c in COMPONENTS:
            acc[c] = acc[c] + comp[c]
    return FrequencyData(s_all, r, w, fields), fem


def field_norms(freq, contour, tgrid, multiplier=None):
    """Time traces of ||E||, ||H|| over the radii of ``freq`` (modal Parseval in angle).

    ``multiplier`` maps (component, s) -> factor applied before inversion.
    """
    nE = np.zeros(tgrid.num_steps + 1)
    nH = np.zeros(tgrid.num_steps + 1)
    w = freq.weights * freq.r**2
    for comps in freq.fields.values():
        for c, val in comps.items():
            data = val if multiplier is None else multiplier(c, val)
            if not np.any(data):
                continue
            sig = laplace_inverse_contour(data, contour, tgrid).values
            part = np.sum(w * sig**2, axis=1)
            if c.startswith("E"):
                nE += part
            else:
                nH += part
    return np.sqrt(nE), np.sqrt(nH)


def difference(a, b):
    out = {}
    for mode in set(a.fields) | set(b.fields):
        ca, cb = a.fields.get(mode), b.fields.get(mode)
        out[mode] = {c: (ca[c] if ca else 0) - (cb[c] if cb else 0) for c in COMPONENTS}
    return FrequencyData(a.s, a.r, a.weights, out)


@dataclass
class SimulationResult:
    times: np.ndarray
    err_E: np.ndarray
    err_H: np.ndarray
    ref_E: np.ndarray
    ref_H: np.ndarray
    pml_E: np.ndarray
    pml_H: np.ndarray
    max_err_E: float
    max_err_H: float
    acausal: float
    arrival_time: float
    freq_error: float
    n_max: int
    h: float
    num_freq: int
    meta: dict = field(default_factory=dict)


def run_simulation(cfg, outer="pec", source=None):
    """PML (or exact-impedance) fields vs the reference on [a, R].

    Errors are relative to the maximum in time of the reference norm of the
    same field, evaluated over t in [0, T].  ``acausal`` is the largest
    error energy before the first wave reaches r = R, relative to the peak
    reference energy.
    """
    phys = cfg.physical
    source = source or synthesize_source(cfg.source)
    validate_source(source, phys)
    contour, tgrid = build_contour(cfg)
    grid = build_grid(cfg)
    inner = grid.restrict(phys.a, phys.R)
    # with outer="impedance" the whole grid [a, rho] is free space closed by the exact condition
    pml, _ = solve_frequency(cfg, source, contour, outer, "inner", grid)
    ref, _ = solve_frequency(cfg, source, contour, "impedance", "inner", inner)
    if not np.allclose(pml.r, ref.r):
        raise PipelineError("PML and reference radii differ")
    diff = difference(pml, ref)
    eE, eH = field_norms(diff, contour, tgrid)
    rE, rH = field_norms(ref, contour, tgrid)
    pE, pH = field_norms(pml, contour, tgrid)
    t = tgrid.times
    horizon = t <= phys.T * (1 + 1e-12)
    scale_E = max(rE[horizon].max(), 1e-300)
    scale_H = max(rH[horizon].max(), 1e-300)
    err_E, err_H = eE / scale_E, eH / scale_H
    r2 = source.support[1]
    t_arr = phys.kappa * (phys.R - r2)
    before = t < t_arr
    energy = phys.eps * eE**2 + phys.mu * eH**2
    ref_energy = max(float(np.max((phys.eps * rE**2 + phys.mu * rH**2)[horizon])), 1e-300)
    acausal = float(np.max(energy[before])) / ref_energy if before.any() else 0.0
    fnum = sum(np.sum(abs(v) ** 2) for m in diff.fields.values() for v in m.values())
    fden = sum(np.sum(abs(v) ** 2) for m in ref.fields.values() for v in m.values())
    return SimulationResult(
        times=t, err_E=err_E, err_H=err_H, ref_E=rE, ref_H=rH, pml_E=pE, pml_H=pH,
        max_err_E=float(err_E[horizon].max()), max_err_H=float(err_H[horizon].max()),
        acausal=acausal, arrival_time=t_arr, freq_error=float(np.sqrt(fnum / max(fden, 1e-300))),
        n_max=source.n_max, h=grid.h, num_freq=contour.num_freq,
        meta={"contour": {"s1": contour.s1, "num_freq": contour.num_freq, "delta_s2": contour.delta_s2},
              "grid": {"order": grid.order, "n_elements": grid.n_elements, "h": grid.h, "outer": outer},
              "time": {"t_final": tgrid.t_final, "num_steps": tgrid.num_steps}})


# ---- sweeps ----------------------------------------------------------------

@dataclass
class ConvergenceRecord:
    d: float
    sigma0: float
    N_max: int
    h: float
    err_E: float
    err_H: float
    bound_shape: float
    slope_fit: float = float("nan")
    flagged: bool = False

    def row(self):
        return [self.d, self.sigma0, self.N_max, self.h, self.err_E, self.err_H, self.bound_shape,
                self.slope_fit]


def bound_shape(phys):
    """T^{9/2} d^2 (1 + sigma0 T)^9 exp(-sigma0 d kappa / 2)."""
    T, d, s0 = phys.T, phys.d, phys.sigma0
    return T**4.5 * d**2 * (1 + s0 * T) ** 9 * math.exp(-s0 * d * phys.kappa / 2)


def fit_slope(d, err):
    d, err = np.asarray(d, float), np.asarray(err, float)
    if d.size < 2:
        return float("nan")
    return float(np.polyfit(d, np.log(err), 1)[0])


def convergence_sweep(cfg, d_values=None, sigma0_values=None, floor=None, monotone_tol=0.05):
    """One record per (d, sigma0); slopes fitted per sigma0 over points above ``floor``."""
    d_values = tuple(d_values or cfg.sweep.d_values)
    sigma0_values = tuple(sigma0_values or cfg.sweep.sigma0_values)
    records = []
    for s0 in sigma0_values:
        group = []
        for d in d_values:
            run_cfg = cfg.with_physical(d=float(d), sigma0=float(s0))
            res = run_simulation(run_cfg)
            group.append(ConvergenceRecord(float(d), float(s0), res.n_max, res.h, res.max_err_E,
                                           res.max_err_H, bound_shape(run_cfg.physical)))
        tot = np.array([g.err_E + g.err_H for g in group])
        for prev, cur, g in zip(tot[:-1], tot[1:], group[1:]):
            if cur > prev * (1 + monotone_tol):
                g.flagged = True
        keep = tot > (floor or 0.0)
        slope = fit_slope([g.d for g, k in zip(group, keep) if k], tot[keep])
        for g in group:
            g.slope_fit = slope
        records.extend(group)
    return records


# ---- stability --------------------------------------------------------------

def source_h1_norm(source, T, num=4001):
    """||J||_{H^1(0,T)} with the spatial L^2 norm over the ball of radius R."""
    from scipy.integrate import quad
    amp2 = sum(abs(t.amplitude) ** 2 for t in source.terms)
    rad = quad(lambda r: (source.radial(r) * r) ** 2, *source.support)[0]
    t = np.linspace(0, T, num)
    g2 = source.time(t) ** 2 + source.time_derivative(t) ** 2
    return math.sqrt(amp2 * rad * trapezoid(g2, t))


def weighted_h1_two_ways(source, contour, tgrid):
    """int exp(-2 s1 t) (|g|^2 + |g'|^2) dt by time quadrature and by contour Parseval."""
    t = tgrid.times
    g, dg = source.time(t), source.time_derivative(t)
    direct = trapezoid(np.exp(-2 * contour.s1 * t) * (g**2 + dg**2), t)
    s = contour.points
    gh = source.laplace_time(s)
    parseval = np.sum(contour.weights * (abs(gh) ** 2 + abs(s * gh) ** 2)).real / (2 * np.pi)
    return float(direct), float(parseval)


@dataclass
class StabilityReport:
    T: float
    sigma0: float
    dtE: float
    curlE: float
    dtH: float
    curlH: float
    j_h1: float
    ratio: float


def stability_monitor(cfg, source=None):
    """Max-in-time energy norms of the PML solution over [a, rho] and their ratio
    to (1 + sigma0 T)^2 ||J||_{H^1(0,T)}."""
    phys = cfg.physical
    source = source or synthesize_source(cfg.source)
    validate_source(source, phys)
    contour, tgrid = build_contour(cfg)
    freq, fem = solve_frequency(cfg, source, contour, "pec", "all")
    alpha, beta = fem.coefficients(freq.r)
    weight = {"r": beta**2 / alpha, "U": alpha, "V": alpha}
    s = freq.s[:, None]
    jprof = source.radial(freq.r)[None, :] * source.laplace_time(freq.s)[:, None]

    def dt(c, val):
        return s * val

    def curl_E(c, val):
        # curl E = -mu s (BA)^-1 H, component by component
        return -phys.mu * s * weight[c[-1]] * val if c.startswith("H") else 0 * val

    dtE, dtH = field_norms(freq, contour, tgrid, dt)
    _, cE = field_norms(freq, contour, tgrid, curl_E)  # stored under H keys
    # curl H = eps s (BA)^-1 E + J; add the source per mode and polarization
    curlH_fields = {}
    for mode, comps in freq.fields.items():
        out = {c: eps_term(phys, s, weight, c, comps) for c in COMPONENTS}
        for term in source.terms:
            if term.mode == mode:
                key = "H_V" if term.polarization == TE else "H_U"
                out[key] = out[key] + term.amplitude * jprof
        curlH_fields[mode] = out
    _, cH = field_norms(FrequencyData(freq.s, freq.r, freq.weights, curlH_fields), contour, tgrid)
    horizon = tgrid.times <= phys.T * (1 + 1e-12)
    j_h1 = source_h1_norm(source, phys.T)
    vals = [float(x[horizon].max()) for x in (dtE, cE, dtH, cH)]
    ratio = sum(vals) / ((1 + phys.sigma0 * phys.T) ** 2 * j_h1) if j_h1 > 0 else 0.0
    return StabilityReport(phys.T, phys.sigma0, *vals, j_h1, ratio)


def eps_term(phys, s, weight, c, comps):
    """Component c of eps s (BA)^-1 E stored under the H key with the same direction."""
    if not c.startswith("H"):
        return np.zeros_like(comps[c])
    e = comps["E_" + c[-1]]
    return phys.eps * s * weight[c[-1]] * e


# ---- output -----------------------------------------------------------------

def emit_results(records, path, cfg=None, constants=None):
    """CSV of records plus ``<path stem>.manifest.json`` next to it."""
    import os
    try:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(CSV_HEADER)
            for rec in records:
                row = rec.row()
                wr.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    manifest = {
        "config": cfg.to_dict() if cfg is not None else None,
        "contour": _contour_manifest(cfg) if cfg is not None else None,
        "versions": {"tdpml": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "fitted_constants": constants or {},
        "flagged": [asdict(r) for r in records if r.flagged],
    }
    mpath = os.path.splitext(path)[0] + ".manifest.json"
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return path, mpath


def _contour_manifest(cfg):
    contour, tgrid = build_contour(cfg)
    grid = build_grid(cfg)
    return {"s1": contour.s1, "num_freq": contour.num_freq, "delta_s2": contour.delta_s2,
            "t_final": tgrid.t_final, "num_steps": tgrid.num_steps,
            "grid_order": grid.order, "grid_elements": grid.n_elements, "grid_h": grid.h}


def read_results(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != CSV_HEADER:
        raise ValueError(f"unexpected header in {path}")
    out = []
    for row in rows[1:]:
        d, s0, n, h, eE, eH, b, sl = row
        out.append(ConvergenceRecord(float(d), float(s0), int(n), float(h), float(eE), float(eH),
                                     float(b), float(sl)))
    return out
