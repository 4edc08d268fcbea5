"""Energy-norm ratio to (1 + sigma0 T)^2 ||J||_H1 over a (T, sigma0) grid."""
import argparse

from tdpml.config import RunConfig
from tdpml.driver import stability_monitor


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--T", type=float, nargs="+", default=[2.0, 4.0, 8.0])
    p.add_argument("--sigma0", type=float, nargs="+", default=[2.0, 4.0, 8.0])
    p.add_argument("--d", type=float, default=1.0)
    args = p.parse_args()
    ratios = []
    print(f"{'T':>4} {'sigma0':>6} {'dtE':>10} {'curlE':>10} {'dtH':>10} {'curlH':>10} {'ratio':>10}")
    for T in args.T:
        for s0 in args.sigma0:
            rep = stability_monitor(RunConfig().with_physical(T=T, sigma0=s0, d=args.d))
            ratios.append(rep.ratio)
            print(f"{T:4g} {s0:6g} {rep.dtE:10.3e} {rep.curlE:10.3e} {rep.dtH:10.3e} {rep.curlH:10.3e} {rep.ratio:10.3e}")
    print(f"spread max/min = {max(ratios) / min(ratios):.1f}")


if __name__ == "__main__":
    main()
