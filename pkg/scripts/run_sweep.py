"""Convergence sweep over layer thickness; writes CSV plus manifest."""
import argparse

from tdpml.config import RunConfig, load_config
from tdpml.driver import convergence_sweep, emit_results


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config")
    p.add_argument("--d", type=float, nargs="+")
    p.add_argument("--sigma0", type=float, nargs="+")
    p.add_argument("--out", default="sweep.csv")
    args = p.parse_args()
    cfg = load_config(args.config) if args.config else RunConfig()
    recs = convergence_sweep(cfg, args.d, args.sigma0)
    for r in recs:
        print(f"sigma0={r.sigma0:<4g} d={r.d:<4g} err_E={r.err_E:.3e} err_H={r.err_H:.3e} "
              f"slope={r.slope_fit:.2f}{'  flagged' if r.flagged else ''}")
    slopes = {f"slope_sigma0_{s:g}": next(r.slope_fit for r in recs if r.sigma0 == s) for s in {r.sigma0 for r in recs}}
    print("wrote", *emit_results(recs, args.out, cfg, slopes))


if __name__ == "__main__":
    main()
