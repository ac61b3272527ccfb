"""Collocation convergence on Burgers with an uncertain shock position.

Runs black-box collocation with increasing Gauss-Legendre point counts and
prints relative L2 errors of E[u] and Var[u] against a dense reference.
"""

from __future__ import annotations

import argparse
import csv
import sys

from intrusive_uq.collocation import run_sc
from intrusive_uq.harness.presets import burgers_random_shock
from intrusive_uq.mesh import relative_l2_error
from intrusive_uq.random_space import tensor_quadrature
from intrusive_uq.solver import SolverConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cells", type=int, default=100)
    parser.add_argument("--smoothing", type=float, default=0.05, help="tanh width of the initial step (0 for a sharp jump)")
    parser.add_argument("--points", type=int, nargs="+", default=[4, 8, 16, 32])
    parser.add_argument("--reference-points", type=int, default=100)
    parser.add_argument("--t-end", type=float, default=0.2)
    parser.add_argument("--output", help="CSV file (default: stdout)")
    args = parser.parse_args(argv)

    case = burgers_random_shock(n_cells=args.cells, x_shock=(0.4, 0.6), smoothing=args.smoothing, t_end=args.t_end)
    mesh = case.problem.mesh
    cfg = SolverConfig(t_end=args.t_end)
    E_ref, V_ref = run_sc(case.problem, tensor_quadrature("gauss_legendre", args.reference_points, 1), cfg).quantities()

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["points", "rel_E_error", "rel_Var_error"])
        for Q in args.points:
            E, V = run_sc(case.problem, tensor_quadrature("gauss_legendre", Q, 1), cfg).quantities()
            writer.writerow([Q, relative_l2_error(E[:, 0], E_ref[:, 0], mesh), relative_l2_error(V[:, 0], V_ref[:, 0], mesh)])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
