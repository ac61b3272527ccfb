"""Command line entry point.

Subcommands::

    run        run a config (or a preset's default config), write snapshot and CSV
    reference  dense Gauss-Legendre collocation reference for a config
    compare    relative L2 errors of E and Var between two snapshots
    mesh-gen   write a mesh file from a preset or a YAML mesh description

Exit codes: 0 success, 2 invalid input, 3 non-convergence, 4 ill-conditioned
dual Hessian, 5 admissibility failure, 6 incompatible snapshot, 7 other
solver failures.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import yaml

from ..errors import (
    AdmissibilityError,
    ConfigError,
    IllConditionedHessian,
    IncompatibleSnapshotError,
    InadmissibleDualError,
    MeshError,
    NonConvergence,
    UQError,
)
from ..mesh import Mesh2D, naca0012_mesh, rectangle_mesh, write_mesh
from .config import load_config, parse_config
from .defaults import default_config
from .experiment import run_experiment, run_reference, write_outputs
from .moment_io import compare_snapshots, read_snapshot
from .presets import build_preset, preset_names

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3
EXIT_ILL_CONDITIONED = 4
EXIT_ADMISSIBILITY = 5
EXIT_SNAPSHOT = 6
EXIT_SOLVER = 7


def exit_code(err: BaseException) -> int:
    if isinstance(err, (ConfigError, MeshError, FileNotFoundError)):
        return EXIT_INPUT
    if isinstance(err, NonConvergence):
        return EXIT_NONCONVERGENCE
    if isinstance(err, IllConditionedHessian):
        return EXIT_ILL_CONDITIONED
    if isinstance(err, (AdmissibilityError, InadmissibleDualError)):
        return EXIT_ADMISSIBILITY
    if isinstance(err, IncompatibleSnapshotError):
        return EXIT_SNAPSHOT
    return EXIT_SOLVER


def _config(args):
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset", "--config")
    if args.config:
        return load_config(args.config)
    if args.preset:
        return parse_config(default_config(args.preset))
    raise ConfigError("a config file (--config) or a preset name (--preset) is required", "--config")


def _output_dir(args, cfg) -> Path:
    return Path(args.output) if args.output else Path(cfg.output)


def cmd_run(args) -> int:
    cfg = _config(args)
    reference = None
    if args.reference:
        reference = read_snapshot(args.reference)
    result = run_experiment(cfg, reference=reference, workers=args.workers)
    paths = write_outputs(result, _output_dir(args, cfg))
    print(f"{cfg.method} on {cfg.preset}: {result.summary.get('steps')} steps -> {paths['moments']}")
    return EXIT_OK


def cmd_reference(args) -> int:
    cfg = _config(args)
    result = run_reference(cfg, workers=args.workers)
    paths = write_outputs(result, _output_dir(args, cfg), stem="reference")
    print(f"reference with {result.summary['quadrature_points']} points -> {paths['moments']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    result = read_snapshot(args.result)
    reference = read_snapshot(args.reference_snapshot)
    region = args.region if args.region else None
    rows = compare_snapshots(result, reference, region)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["component", "rel_E_error", "rel_Var_error"])
        for r in rows:
            writer.writerow([r["component"], repr(r["rel_E_error"]), repr(r["rel_Var_error"])])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


_MESH_BUILDERS = {"naca0012": naca0012_mesh, "rectangle": rectangle_mesh}


def _mesh_from_source(source: str) -> Mesh2D:
    if source in preset_names():
        mesh = build_preset(source).problem.mesh
        if not isinstance(mesh, Mesh2D):
            raise ConfigError(f"preset {source} uses a 1D mesh", "source")
        return mesh
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"neither a preset nor a file (presets: {', '.join(preset_names())})", "source")
    data = yaml.safe_load(path.read_text()) or {}
    if not isinstance(data, dict) or data.get("kind") not in _MESH_BUILDERS:
        raise ConfigError(f"expected kind: {' | '.join(_MESH_BUILDERS)}", "kind")
    params = {k: v for k, v in data.items() if k != "kind"}
    try:
        return _MESH_BUILDERS[data["kind"]](**params)
    except TypeError as err:
        raise ConfigError(str(err), "params") from None


def cmd_mesh_gen(args) -> int:
    mesh = _mesh_from_source(args.source)
    out = Path(args.output or "mesh.su2")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_mesh(mesh, out)
    print(f"{mesh.n_cells} triangles -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="intrusive-uq", description="Intrusive and collocation UQ experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment YAML file")
        p.add_argument("--preset", help=f"use the default config of a preset ({', '.join(preset_names())})")
        p.add_argument("--workers", type=int, default=None, help="worker threads (overrides the config)")
        p.add_argument("--output", help="output directory (overrides the config)")

    p_run = sub.add_parser("run", help="run an experiment")
    common(p_run)
    p_run.add_argument("--reference", help="reference snapshot; adds error columns to the history")
    p_run.set_defaults(func=cmd_run)

    p_ref = sub.add_parser("reference", help="dense collocation reference")
    common(p_ref)
    p_ref.set_defaults(func=cmd_reference)

    p_cmp = sub.add_parser("compare", help="relative L2 errors between snapshots")
    p_cmp.add_argument("result", help="snapshot to assess")
    p_cmp.add_argument("reference_snapshot", metavar="reference", help="reference snapshot")
    p_cmp.add_argument("--region", type=float, nargs="+", help="error box: xmin xmax [ymin ymax]")
    p_cmp.add_argument("--output", help="CSV file (default: stdout)")
    p_cmp.set_defaults(func=cmd_compare)

    p_mesh = sub.add_parser("mesh-gen", help="write a mesh file")
    p_mesh.add_argument("source", help="2D preset name or YAML file with kind: naca0012 | rectangle")
    p_mesh.add_argument("--output", help="mesh file (default: mesh.su2)")
    p_mesh.set_defaults(func=cmd_mesh_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        parser.error("--workers must be positive")
    try:
        return args.func(args)
    except (UQError, FileNotFoundError) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return exit_code(err)


if __name__ == "__main__":
    sys.exit(main())
