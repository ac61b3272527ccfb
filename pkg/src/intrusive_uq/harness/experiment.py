"""Turn an :class:`ExperimentConfig` into a run, a snapshot and a history table."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..closure import euler_entropy_closure, quadratic_closure
from ..collocation import run_sc
from ..errors import ConfigError, IncompatibleSnapshotError
from ..mesh import Mesh2D, load_mesh, mesh_hash, region_mask
from ..models import EulerModel
from ..random_space import build_total_degree_basis, tensor_quadrature
from ..solver import MomentSolver, RefinementLadder, RetardationSchedule, moments_to_quantities
from .config import ADAPTIVE, COLLOCATION, ExperimentConfig
from .moment_io import Snapshot, relative_error, write_snapshot
from .presets import Case, build_preset

__all__ = ["HISTORY_COLUMNS", "ExperimentResult", "prepare_case", "run_experiment", "run_reference", "write_outputs"]

HISTORY_COLUMNS = ("iteration", "pseudo_time", "wall_seconds", "residual")
ERROR_COLUMNS = ("rel_E_error", "rel_Var_error")


@dataclass(eq=False)
class ExperimentResult:
    config: ExperimentConfig
    case: Case
    snapshot: Snapshot
    history: list[dict]
    summary: dict
    raw: object = None
    has_errors: bool = False
    extra: dict = field(default_factory=dict)


def prepare_case(cfg: ExperimentConfig) -> Case:
    case = build_preset(cfg.preset, **cfg.params)
    if cfg.mesh is not None:
        if not isinstance(case.problem.mesh, Mesh2D):
            raise ConfigError("a mesh file can only replace a 2D preset mesh", "problem.mesh")
        case.problem = dataclasses.replace(case.problem, mesh=load_mesh(cfg.mesh))
    return case


def _closure(name: str, model):
    if name == "quadratic":
        return quadratic_closure(model.m)
    if not isinstance(model, EulerModel):
        raise ConfigError("the entropy closure is defined for the Euler equations only", "closure")
    return euler_entropy_closure(model.gamma, model.d)


def _solver_config(cfg: ExperimentConfig, case: Case, workers: int | None):
    values = {**case.solver, **cfg.solver}
    if workers is not None:
        values["workers"] = workers
    try:
        return cfg.solver_config(**values)
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err), "solver") from None


def _is_steady(sc) -> bool:
    return sc.t_end is None and sc.n_steps is None


def _region(cfg: ExperimentConfig, case: Case):
    return tuple(cfg.region) if cfg.region is not None else case.region


class _ErrorTracker:
    def __init__(self, reference: Snapshot | None, mesh, region):
        self.reference = reference
        self.volumes = np.asarray(mesh.volumes, dtype=float)
        if reference is not None and reference.mesh_hash != mesh_hash(mesh):
            raise IncompatibleSnapshotError("reference snapshot was computed on a different mesh")
        self.mask = region_mask(mesh, region)

    def __call__(self, E, V) -> dict:
        if self.reference is None:
            return {}
        return {
            "rel_E_error": relative_error(E[:, 0], self.reference.E[:, 0], self.volumes, self.mask),
            "rel_Var_error": relative_error(V[:, 0], self.reference.Var[:, 0], self.volumes, self.mask),
        }


def _intrusive(cfg, case, sc, track):
    problem = case.problem
    closure_name = "quadratic" if cfg.method == "sg" else (cfg.closure or case.closure)
    closure = _closure(closure_name, problem.model)
    steady = _is_steady(sc)
    variant = "osipm" if cfg.method in ("osipm", "readosipm") else "ipm"
    if variant == "osipm" and not steady:
        raise ConfigError("One-Shot variants iterate to a steady state; remove t_end/n_steps", "solver")
    schedule = None
    if cfg.method in ADAPTIVE:
        rungs = [r.quadrature.build(problem.p) for r in cfg.ladder]
        ladder = RefinementLadder(
            [r.order for r in cfg.ladder], rungs, problem.p, cfg.delta_dec, cfg.delta_inc, cfg.initial_level
        )
        if cfg.retardation_orders:
            if not steady:
                raise ConfigError("refinement retardation applies to steady runs only", "retardation")
            schedule = RetardationSchedule.from_orders(ladder, cfg.retardation_orders, cfg.retardation_thresholds)
        adaptive = True
    else:
        ladder = RefinementLadder.single(cfg.order, cfg.quadrature.build(problem.p), problem.p)
        adaptive = False
    solver = MomentSolver(problem, closure, ladder, sc, variant=variant, adaptive=adaptive, schedule=schedule)

    def observer(s, rec):
        return track(*moments_to_quantities(s.u))

    result = solver.run_steady(observer) if steady else solver.run_unsteady(observer)
    E, V = moments_to_quantities(result.moments)
    orders = np.asarray(ladder.orders)[result.levels - 1]
    history = result.history
    summary = {
        "steps": result.steps,
        "pseudo_time": result.time,
        "wall_seconds": history[-1]["wall_seconds"] if history else 0.0,
        "total_newton_steps": result.total_newton_steps,
        "converged": result.converged,
        "level_counts": np.bincount(result.levels, minlength=ladder.n_levels + 1)[1:].tolist(),
    }
    return result.moments, orders, E, V, history, summary, result


def _collocation(cfg, case, sc, track, rule, order, mode):
    problem = case.problem
    basis = build_total_degree_basis(order, problem.p)
    observer = (lambda E, V, rec: track(E, V)) if mode == "coupled" else None
    run = run_sc(problem, rule, sc, mode=mode, basis=basis, observer=observer, store_trajectory=False)
    E, V = run.quantities()
    if mode == "coupled":
        history = run.history
    else:
        history = [
            {
                "iteration": int(run.steps.max()),
                "pseudo_time": float(run.times.max()),
                "wall_seconds": run.wall_seconds,
                "residual": math.nan,
                **track(E, V),
            }
        ]
    summary = {
        "steps": int(run.steps.max()),
        "pseudo_time": float(run.times.max()),
        "wall_seconds": run.wall_seconds,
        "quadrature_points": rule.Q,
        "converged": True,
    }
    orders = np.full(problem.mesh.n_cells, order)
    return run.moments, orders, E, V, history, summary, run


def _snapshot(method, case, moments, orders, E, V) -> Snapshot:
    mesh = case.problem.mesh
    return Snapshot(
        method,
        case.problem.p,
        mesh_hash(mesh),
        np.asarray(orders, dtype=int),
        np.asarray(mesh.volumes, dtype=float),
        np.asarray(mesh.centroids, dtype=float),
        E,
        V,
        moments,
    )


def run_experiment(cfg: ExperimentConfig, reference: Snapshot | None = None, workers: int | None = None) -> ExperimentResult:
    """Run ``cfg``; with a ``reference`` every history row carries relative errors."""
    case = prepare_case(cfg)
    sc = _solver_config(cfg, case, workers)
    track = _ErrorTracker(reference, case.problem.mesh, _region(cfg, case))
    if cfg.method in COLLOCATION:
        order = cfg.order if cfg.order is not None else 1
        rule = cfg.quadrature.build(case.problem.p)
        mode = "blackbox" if cfg.method == "sc_blackbox" else "coupled"
        out = _collocation(cfg, case, sc, track, rule, order, mode)
    else:
        out = _intrusive(cfg, case, sc, track)
    moments, orders, E, V, history, summary, raw = out
    summary = {"method": cfg.method, "preset": cfg.preset, **summary, **track(E, V)}
    snap = _snapshot(cfg.method, case, moments, orders, E, V)
    return ExperimentResult(cfg, case, snap, history, summary, raw, reference is not None)


def run_reference(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Dense tensor Gauss-Legendre collocation (black box) for the configured problem."""
    case = prepare_case(cfg)
    sc = _solver_config(cfg, case, workers)
    points = cfg.reference_points or case.reference_points
    rule = tensor_quadrature(cfg.reference_family, points, case.problem.p)
    if cfg.reference_order is not None:
        order = cfg.reference_order
    elif cfg.ladder:
        order = cfg.ladder[-1].order
    else:
        order = cfg.order if cfg.order is not None else 1
    track = _ErrorTracker(None, case.problem.mesh, None)
    moments, orders, E, V, history, summary, raw = _collocation(cfg, case, sc, track, rule, order, "blackbox")
    summary = {"method": "reference", "preset": cfg.preset, **summary}
    return ExperimentResult(cfg, case, _snapshot("reference", case, moments, orders, E, V), history, summary, raw)


def write_history(path, history: list[dict], with_errors: bool) -> None:
    cols = HISTORY_COLUMNS + (ERROR_COLUMNS if with_errors else ())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for rec in history:
            writer.writerow([repr(float(rec.get(c, math.nan))) if c != "iteration" else int(rec[c]) for c in cols])


def write_outputs(result: ExperimentResult, out_dir, stem: str = "") -> dict:
    """Write ``moments.txt``, ``history.csv``, ``summary.json`` and the resolved config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = f"{stem}_" if stem else ""
    paths = {
        "moments": out / f"{prefix}moments.txt",
        "history": out / f"{prefix}history.csv",
        "summary": out / f"{prefix}summary.json",
        "config": out / f"{prefix}config.yaml",
    }
    write_snapshot(paths["moments"], result.snapshot)
    write_history(paths["history"], result.history, result.has_errors)
    paths["summary"].write_text(json.dumps(result.summary, indent=2, default=float) + "\n")
    result.config.dump(paths["config"])
    return paths
