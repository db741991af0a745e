"""Region of the multiplicative two-user channel Y = S (X1 OR X2) for several D.

Prints the Pareto boundary points and the sum-rate at each D, showing how the
shared constraint shrinks the region down to the origin at D = 0.

    python3 scripts/mac_region.py --r 0.3 --grid 51
"""
import argparse
import csv
import sys
import warnings

import numpy as np

from capdist.mac import MacChannelSpec, mac_region_compute


def multiplicative_mac(r):
    trans = np.zeros((2, 2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            for s in range(2):
                trans[x1, x2, s, s * (x1 | x2)] = 1.0
    return MacChannelSpec.from_arrays(trans, [1 - r, r])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r", type=float, default=0.3)
    ap.add_argument("--grid", type=int, default=51)
    ap.add_argument("--D", default="0,0.02,0.05,0.1,0.2,0.3")
    args = ap.parse_args()

    spec = multiplicative_mac(args.r)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["D", "R1", "R2", "cost", "atoms"])
    for D in (float(v) for v in args.D.split(",")):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            reg = mac_region_compute(spec, D, grid_steps=args.grid)
        for p in reg.points:
            out.writerow([D, f"{p.r1:.10f}", f"{p.r2:.10f}", f"{p.cost:.10f}", len(p.atoms)])
        print(f"# D={D}: sum-rate {reg.support(1, 1):.6f} nats, {len(reg.points)} points",
              file=sys.stderr)


if __name__ == "__main__":
    main()
