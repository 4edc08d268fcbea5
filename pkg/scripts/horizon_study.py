"""PML error on [0, T] as the contour period t_final = factor * T varies.

The layer is lossless in time, so the error seen on [0, T] consists of late
reflections folded back by the contour period.
"""
import argparse

from tdpml.config import ContourConfig, RunConfig
from tdpml.driver import fit_slope, run_simulation


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--factors", type=float, nargs="+", default=[2.0, 2.5, 3.0, 4.0, 6.0])
    p.add_argument("--d", type=float, nargs="+", default=[1.0, 1.5, 2.0, 2.5, 3.0])
    args = p.parse_args()
    for f in args.factors:
        errs = []
        for d in args.d:
            cfg = RunConfig(physical=RunConfig().with_physical(d=d).physical,
                            contour=ContourConfig(horizon_factor=f, num_steps=int(128 * f)))
            res = run_simulation(cfg)
            errs.append(res.max_err_E + res.max_err_H)
        print(f"factor {f:<4g} slope {fit_slope(args.d, errs):6.2f}  " + " ".join(f"{e:.1e}" for e in errs))


if __name__ == "__main__":
    main()
