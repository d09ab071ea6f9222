#!/usr/bin/env python3
"""Reproduce the planar flux-space convergence tables: uniform diffusion
(alpha = 1) and convection-dominated (alpha = 0.01), both with the
rotational drift field."""

import argparse
import os

from safefem.verify import make_case, run_convergence


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default=".")
    ap.add_argument("--ns", default="4,8,16,32,64,128",
                    help="comma-separated mesh sizes")
    args = ap.parse_args()
    ns = tuple(int(p) for p in args.ns.split(",") if p.strip())
    for alpha in (1.0, 0.01):
        report = run_convergence(make_case("div2d", alpha=alpha, gamma=1.0), ns)
        print(report)
        print()
        path = os.path.join(args.outdir, f"div2d_alpha{alpha:g}_convergence.csv")
        report.to_csv(path)
        print(f"wrote {path}\n")


if __name__ == "__main__":
    main()
