"""Command line: verify | solve | sweep | green-decay."""
import argparse
import csv
import logging
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_config

log = logging.getLogger("tdpml")


def _config(args):
    return load_config(args.config) if args.config else RunConfig()


def cmd_verify(args):
    from .checks import run_all
    ok = True
    for name, passed, detail in run_all():
        print(f"{'PASS' if passed else 'FAIL'}  {name}  ({detail})")
        ok &= passed
    return 0 if ok else 1


def cmd_solve(args):
    from .driver import run_simulation
    cfg = _config(args)
    res = run_simulation(cfg)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t", "err_E", "err_H", "ref_E", "ref_H", "pml_E", "pml_H"])
            for row in zip(res.times, res.err_E, res.err_H, res.ref_E, res.ref_H, res.pml_E, res.pml_H):
                wr.writerow([format(float(v), ".17g") for v in row])
    print(f"max err_E {res.max_err_E:.3e}  max err_H {res.max_err_H:.3e}  "
          f"acausal energy {res.acausal:.3e} (t < {res.arrival_time:.3g})")
    ok = res.acausal <= args.acausal_tol
    print(f"{'PASS' if ok else 'FAIL'}  causality (<= {args.acausal_tol:g})")
    return 0 if ok else 1


def cmd_sweep(args):
    from .driver import convergence_sweep, emit_results
    cfg = _config(args)
    recs = convergence_sweep(cfg)
    consts = {}
    ok = True
    for s0 in sorted({r.sigma0 for r in recs}):
        group = [r for r in recs if r.sigma0 == s0]
        slope = group[0].slope_fit
        target = -0.75 * s0 * cfg.physical.kappa / 2
        consts[f"slope_sigma0_{s0:g}"] = slope
        passed = slope <= target
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  sigma0={s0:g}: slope {slope:.3f} (<= {target:.3f})")
        for r in group:
            print(f"    d={r.d:<5g} err_E={r.err_E:.3e} err_H={r.err_H:.3e}{'  flagged' if r.flagged else ''}")
    if args.out:
        paths = emit_results(recs, args.out, cfg, consts)
        print("wrote", *paths)
    return 0 if ok else 1


def cmd_green_decay(args):
    from .driver import build_contour
    from .green import green_decay_samples
    cfg = _config(args)
    rng = np.random.default_rng(cfg.seed)
    ok = True
    print(f"{'d':>5} {'viol|rho_s/s|>=d':>17} {'viol Re rho_s':>14}  fitted constants")
    for d in args.d:
        run_cfg = cfg.with_physical(d=d)
        phys = run_cfg.physical
        contour, _ = build_contour(run_cfg)
        out = green_decay_samples(phys, phys.profile(), contour.points, args.samples, rng)
        v1 = int(np.sum(out["abs_rho_over_s"] < d * (1 - 1e-12)))
        v2 = int(np.sum(out["re_rho"] < out["rho_sigma_hat"] * (1 - 1e-12)))
        ok &= v1 == 0 and v2 == 0
        consts = " ".join(f"{k}={v.max():.3e}" for k, v in out["ratios"].items())
        print(f"{d:5g} {v1:17d} {v2:14d}  {consts}")
    return 0 if ok else 1


def main(argv=None):
    p = argparse.ArgumentParser(prog="tdpml", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)
    for name in ("verify", "solve", "sweep", "green-decay"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML configuration file")
        if name in ("solve", "sweep"):
            sp.add_argument("--out", help="CSV output path")
        if name == "solve":
            sp.add_argument("--acausal-tol", type=float, default=1e-5)
        if name == "green-decay":
            sp.add_argument("--d", type=float, nargs="+", default=[1.0, 2.0, 4.0])
            sp.add_argument("--samples", type=int, default=2000)
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    handler = {"verify": cmd_verify, "solve": cmd_solve, "sweep": cmd_sweep, "green-decay": cmd_green_decay}
    try:
        return handler[args.cmd](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
