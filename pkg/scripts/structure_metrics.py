"""Structural numbers of the grid circuit against R: N, depth, l_x, l_y,
Q1-Q2 distance and qubit lifespan.

    python3 scripts/structure_metrics.py [-R 4 8 16] [-L 0 1] [--variant bell_strip]
"""

import argparse
import csv
import sys

from artifact.protocol import VARIANTS, ProtocolConfig, build_c_bell, structure_metrics


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("-R", type=int, nargs="+", default=[4, 8, 16])
    ap.add_argument("-L", type=int, nargs="+", default=[0, 1])
    ap.add_argument("--variant", choices=VARIANTS, default="bell_strip")
    args = ap.parse_args()
    w = None
    for L in args.L:
        for R in args.R:
            m = {"R": R, "L": L, **structure_metrics(build_c_bell(ProtocolConfig(R=R, L=L, variant=args.variant)))}
            if w is None:
                w = csv.DictWriter(sys.stdout, fieldnames=list(m))
                w.writeheader()
            w.writerow(m)


if __name__ == "__main__":
    main()
