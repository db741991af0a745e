"""Rayleigh-fading bounds against the log-log window for a grid of SNRs.

    python3 scripts/rayleigh_table.py --alphas 0,0.5 --kappa 1
"""
import argparse
import csv
import sys

import numpy as np

from capdist.rayleigh import RayleighQuery, asymptotic_window, lower_bound, upper_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", default="0,0.25,0.5,0.75")
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--log10-rho", default="4,6,8,10,20,50,100,300")
    args = ap.parse_args()

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["alpha", "rho", "D", "lower", "upper", "upper_corrected", "window_lo",
                  "window_hi", "upper_minus_hi", "lower_minus_lo"])
    for alpha in (float(a) for a in args.alphas.split(",")):
        for e in (float(v) for v in args.log10_rho.split(",")):
            rho = 10.0 ** e
            q = RayleighQuery.scaled(rho, alpha, args.kappa)
            if q.D > 1.0:
                continue
            lo_w, hi_w = asymptotic_window(rho, alpha)
            lo_b, up_b = lower_bound(q), upper_bound(q)
            up_c = upper_bound(q, mean_correction=True)
            out.writerow([alpha, f"{rho:.3g}", f"{q.D:.6g}", f"{lo_b:.8f}", f"{up_b:.8f}",
                          f"{up_c:.8f}", f"{lo_w:.8f}", f"{hi_w:.8f}", f"{up_b - hi_w:+.4f}",
                          f"{lo_b - lo_w:+.4f}"])

    print("# alpha = 1 (D = kappa/rho): upper bound as rho grows", file=sys.stderr)
    for corrected in (False, True):
        vals = [upper_bound(RayleighQuery(rho, args.kappa / rho), mean_correction=corrected)
                for rho in 10.0 ** np.arange(4, 13)]
        tag = "mean-corrected" if corrected else "as printed"
        print(f"#   {tag}: " + " ".join(f"{v:.4f}" for v in vals), file=sys.stderr)


if __name__ == "__main__":
    main()
