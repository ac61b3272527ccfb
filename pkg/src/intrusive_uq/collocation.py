"""Stochastic collocation: deterministic finite-volume solves at quadrature points.

Two modes share the finite-volume kernel of the intrusive solvers.

* ``blackbox``: every point is an independent deterministic run with its own
  time step and (in steady mode) its own stopping test.
* ``coupled``: all points advance with one shared time step, so expectation
  and variance can be recorded after every pseudo-time step.

Points are processed in fixed chunks and reductions over points run in chunk
order, so results do not depend on the worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .closure import Projector
from .errors import CollocationFailure
from .mesh import relative_l2_error
from .random_space import BasisSet, QuadratureRule, tensor_quadrature
from .solver.adaptivity import moments_to_quantities
from .solver.config import SolverConfig
from .solver.discretization import StencilPlan, build_grid, cell_average
from .solver.engine import RunResult
from .solver.problem import Problem

__all__ = ["CollocationRun", "run_sc", "sc_error_series", "sc_quantities", "solve_deterministic", "quantities_of"]


@dataclass(eq=False)
class CollocationRun:
    """Outcome of a collocation run.

    ``states`` holds the final deterministic solutions ``(n_cells, Q, m)``.
    ``trajectory`` (coupled mode) lists ``(E, Var)`` after every step,
    starting with the initial condition.
    """

    rule: QuadratureRule
    mode: str
    states: np.ndarray
    steps: np.ndarray
    times: np.ndarray
    wall_seconds: float
    history: list[dict] = field(default_factory=list)
    trajectory: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    moments: np.ndarray | None = None
    basis: BasisSet | None = None

    def quantities(self):
        return sc_quantities(self.states, self.rule)


def _chunks(Q: int, size: int) -> list[np.ndarray]:
    return [np.arange(i, min(i + size, Q)) for i in range(0, Q, size)]


def sc_quantities(states: np.ndarray, rule: QuadratureRule, chunk: int = 64):
    """Expectation and variance ``(n, m)`` by quadrature, summed in fixed chunk order."""
    wf = rule.wf
    E = 0.0
    for c in _chunks(rule.Q, chunk):
        E = E + np.einsum("k,jkm->jm", wf[c], states[:, c])
    V = 0.0
    for c in _chunks(rule.Q, chunk):
        d = states[:, c] - E[:, None, :]
        V = V + np.einsum("k,jkm->jm", wf[c], d * d)
    return E, V


def _project(states, proj: Projector, chunk: int = 64):
    out = 0.0
    for c in _chunks(proj.Q, chunk):
        out = out + np.matmul((proj.phi[c] * proj.wf[c, None]).T, states[:, c])
    return out


class _Kernel:
    """Finite-volume update over all cells for a subset of collocation points."""

    def __init__(self, problem: Problem, rule: QuadratureRule):
        self.model = problem.model
        self.grid = build_grid(problem.mesh, problem.boundary)
        g = self.grid
        self.plan = StencilPlan(g, np.arange(g.n_cells))
        widths = np.full(g.n_cells, g.dx) if g.dx is not None else None
        self.U0 = cell_average(problem.initial_condition, g.centroids, widths, rule.points)
        gd = self.plan.dirichlet
        if gd.size:
            gw = None if g.ghost_width is None else g.ghost_width[gd]
            farfield = problem.farfield or problem.initial_condition
            self.Ud = cell_average(farfield, g.ghost_position[gd], gw, rule.points)
        else:
            self.Ud = np.zeros((0, rule.Q, self.U0.shape[2]))
        self.hmin = float(np.min(g.h))

    def extend(self, U, cols):
        return self.plan.assemble(U, self.model, self.Ud[:, cols])

    def bad_points(self, Ue) -> np.ndarray:
        return np.flatnonzero(~np.all(self.model.admissible(Ue), axis=0))

    def speeds(self, Ue) -> np.ndarray:
        return np.max(self.model.max_wave_speed(Ue), axis=0)

    def dt(self, smax, cfg: SolverConfig):
        if cfg.dt is not None:
            return np.full_like(smax, cfg.dt)
        return np.where(smax > 0.0, cfg.cfl * self.hmin / np.where(smax > 0.0, smax, 1.0), cfg.cfl * self.hmin)

    def advance(self, Ue, dt):
        dx_dt = None if self.grid.dx is None else self.grid.dx / dt
        return self.plan.update(self.model, Ue, dt, dx_dt)


def run_sc(
    problem: Problem,
    rule: QuadratureRule,
    config: SolverConfig,
    mode: str = "blackbox",
    basis: BasisSet | None = None,
    steady: bool | None = None,
    observer=None,
    store_trajectory: bool = True,
) -> CollocationRun:
    """Collocation run; see the module docstring for the two modes.

    Steady runs stop a point (blackbox) once ``sum_j vol_j |rho_j^n - rho_j^{n-1}|``
    drops to ``config.eps``; coupled runs stop once the same quantity for the
    expectation of the first variable does. When ``basis`` is given the final
    moments ``sum_k w_k f_k u(., xi_k) phi(xi_k)`` are stored as well.
    """
    if mode not in ("blackbox", "coupled"):
        raise ValueError(f"unknown collocation mode {mode!r}")
    if steady is None:
        steady = config.t_end is None and config.n_steps is None
    kernel = _Kernel(problem, rule)
    t0 = time.perf_counter()
    if mode == "blackbox":
        run = _blackbox(kernel, rule, config, steady)
    else:
        run = _coupled(kernel, rule, config, steady, observer, store_trajectory)
    run.wall_seconds = time.perf_counter() - t0
    if basis is not None:
        run.basis = basis
        run.moments = _project(run.states, Projector.build(basis, rule), config.quad_chunk)
    return run


def _map(workers, fn, items):
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _blackbox(kernel: _Kernel, rule, cfg: SolverConfig, steady: bool) -> CollocationRun:
    vol = kernel.grid.volumes

    def solve(cols):
        U = kernel.U0[:, cols].copy()
        q = cols.size
        t = np.zeros(q)
        steps = np.zeros(q, dtype=int)
        active = np.ones(q, dtype=bool)
        failures = {}
        while np.any(active):
            a = np.flatnonzero(active)
            if cfg.n_steps is not None:
                a = a[steps[a] < cfg.n_steps]
            if cfg.t_end is not None:
                a = a[t[a] < cfg.t_end * (1.0 - 1e-14)]
            over = a[steps[a] >= cfg.max_steps]
            for k in over:
                failures[int(cols[k])] = f"no convergence after {cfg.max_steps} steps"
            a = a[steps[a] < cfg.max_steps]
            active[:] = False
            active[a] = True
            if a.size == 0:
                break
            Ue = kernel.extend(U[:, a], cols[a])
            bad = kernel.bad_points(Ue)
            if bad.size:
                for k in a[bad]:
                    failures[int(cols[k])] = "inadmissible state"
                active[a[bad]] = False
                continue
            dt = kernel.dt(kernel.speeds(Ue), cfg)
            if cfg.t_end is not None:
                dt = np.minimum(dt, cfg.t_end - t[a])
            Un = kernel.advance(Ue, dt)
            if steady:
                res = np.sum(vol[:, None] * np.abs(Un[:, :, 0] - U[:, a, 0]), axis=0)
                active[a[res <= cfg.eps]] = False
            U[:, a] = Un
            t[a] += dt
            steps[a] += 1
        return U, t, steps, failures

    chunks = _chunks(rule.Q, cfg.quad_chunk)
    parts = _map(cfg.workers, solve, chunks)
    failures = {}
    for p in parts:
        failures.update(p[3])
    if failures:
        raise CollocationFailure(f"deterministic solve failed at {len(failures)} point(s)", failures)
    states = np.concatenate([p[0] for p in parts], axis=1)
    times = np.concatenate([p[1] for p in parts])
    steps = np.concatenate([p[2] for p in parts])
    return CollocationRun(rule, "blackbox", states, steps, times, 0.0)


def _coupled(kernel: _Kernel, rule, cfg: SolverConfig, steady: bool, observer, store) -> CollocationRun:
    vol = kernel.grid.volumes
    U = kernel.U0.copy()
    chunks = _chunks(rule.Q, cfg.quad_chunk)
    t = 0.0
    n = 0
    wall = 0.0
    history: list[dict] = []
    E, V = sc_quantities(U, rule, cfg.quad_chunk)
    traj = [(E, V)] if store else []
    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None

    def pmap(fn, items):
        return list(pool.map(fn, items)) if pool is not None and len(items) > 1 else [fn(i) for i in items]

    try:
        while True:
            if cfg.n_steps is not None and n >= cfg.n_steps:
                break
            if cfg.t_end is not None and t >= cfg.t_end * (1.0 - 1e-14):
                break
            if n >= cfg.max_steps:
                raise CollocationFailure(f"coupled run did not finish in {cfg.max_steps} steps", {})
            t0 = time.perf_counter()

            def states(cols):
                Ue = kernel.extend(U[:, cols], cols)
                bad = kernel.bad_points(Ue)
                if bad.size:
                    raise CollocationFailure(
                        "inadmissible state in coupled collocation", {int(cols[k]): "inadmissible state" for k in bad}
                    )
                return Ue, float(np.max(kernel.speeds(Ue)))

            ext = pmap(states, chunks)
            smax = max(s for _, s in ext)
            dt = float(kernel.dt(np.array([smax]), cfg)[0])
            if cfg.t_end is not None:
                dt = min(dt, cfg.t_end - t)
            new = pmap(lambda k: kernel.advance(ext[k][0], dt), list(range(len(chunks))))
            U_new = np.concatenate(new, axis=1)
            E_new, V_new = sc_quantities(U_new, rule, cfg.quad_chunk)
            res = float(np.sum(vol * np.abs(E_new[:, 0] - E[:, 0])))
            U, E, V = U_new, E_new, V_new
            t += dt
            n += 1
            wall += time.perf_counter() - t0
            rec = {"iteration": n, "pseudo_time": t, "dt": dt, "wall_seconds": wall, "residual": res}
            if observer is not None:
                rec.update(observer(E, V, rec) or {})
            history.append(rec)
            if store:
                traj.append((E, V))
            if steady and res <= cfg.eps:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return CollocationRun(rule, "coupled", U, np.full(rule.Q, n), np.full(rule.Q, t), wall, history, traj)


def quantities_of(obj, chunk: int = 64):
    """``(E, Var)`` from a collocation run, an intrusive run result, moments or a pair."""
    if isinstance(obj, CollocationRun):
        return obj.quantities()
    if isinstance(obj, RunResult):
        return moments_to_quantities(obj.moments)
    if isinstance(obj, tuple) and len(obj) == 2:
        return np.asarray(obj[0]), np.asarray(obj[1])
    return moments_to_quantities(np.asarray(obj))


def sc_error_series(run: CollocationRun, reference, mesh, region=None, component: int = 0, blackbox_seconds=None):
    """Relative L2 errors of E and Var after every coupled step.

    Row 0 is the initial condition. ``rescaled_seconds`` maps the coupled
    wall clock onto a black-box run of ``blackbox_seconds`` total duration
    (identical to the raw clock when not given).
    """
    if run.mode != "coupled" or not run.trajectory:
        raise ValueError("error series need a coupled run with a stored trajectory")
    E_ref, V_ref = quantities_of(reference)
    total = run.history[-1]["wall_seconds"] if run.history else 0.0
    scale = (blackbox_seconds / total) if (blackbox_seconds is not None and total > 0) else 1.0
    rows = []
    for k, (E, V) in enumerate(run.trajectory):
        rec = run.history[k - 1] if k > 0 else {"iteration": 0, "pseudo_time": 0.0, "wall_seconds": 0.0}
        rows.append(
            {
                "iteration": rec["iteration"],
                "pseudo_time": rec["pseudo_time"],
                "wall_seconds": rec["wall_seconds"],
                "rescaled_seconds": rec["wall_seconds"] * scale,
                "rel_E_error": relative_l2_error(E[:, component], E_ref[:, component], mesh, region),
                "rel_Var_error": relative_l2_error(V[:, component], V_ref[:, component], mesh, region),
            }
        )
    return rows


def solve_deterministic(model, mesh, state_fn, config: SolverConfig, boundary=None) -> np.ndarray:
    """Deterministic finite-volume run; ``state_fn(x)`` gives ``(n, m)`` initial states."""
    rule = tensor_quadrature("gauss_legendre", [1])

    def ic(x, xi):
        return np.asarray(state_fn(x), dtype=float).reshape(x.shape[0], 1, -1).repeat(xi.shape[0], axis=1)

    problem = Problem(model, mesh, ic, 1, boundary=boundary or {})
    return run_sc(problem, rule, config, mode="blackbox").states[:, 0, :]
