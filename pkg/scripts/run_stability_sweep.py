#!/usr/bin/env python3
"""Vanishing-diffusion sweep for the constant-load flux problem: solve at
a fixed mesh for decreasing alpha (including the upwind limit alpha = 0)
and report max-norm stability metrics."""

import argparse
import os

import numpy as np

from safefem.verify import make_case, solve_case, stability_metrics, write_solution_vtk


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default=".")
    ap.add_argument("--n", type=int, default=32, help="mesh size (1/h)")
    ap.add_argument("--alphas", default="2e-3,1e-5,1e-7,0",
                    help="comma-separated diffusion values")
    ap.add_argument("--vtk", action="store_true", help="dump per-alpha VTK files")
    args = ap.parse_args()
    alphas = [float(p) for p in args.alphas.split(",") if p.strip()]

    reference = None
    print(f"{'alpha':>10} {'max |DOF|':>14} {'max diff to prev':>18}")
    for alpha in alphas:
        case = make_case("div2d-stability", alpha=alpha, gamma=1.0)
        mesh, u, rep = solve_case(case, args.n)
        assert np.all(np.isfinite(u)), f"non-finite solution at alpha={alpha}"
        m = stability_metrics(u, reference=reference)
        diff = f"{m.max_diff:.6g}" if m.max_diff is not None else "-"
        print(f"{alpha:>10g} {m.max_abs_dof:>14.6g} {diff:>18}")
        if args.vtk:
            path = os.path.join(args.outdir, f"stability_alpha{alpha:g}_n{args.n}.vtk")
            write_solution_vtk(mesh, case.k, u, path, label="flux")
        reference = u


if __name__ == "__main__":
    main()
