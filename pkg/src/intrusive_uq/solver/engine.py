"""Pseudo-time stepping of the moment system.

One step has two phases. The dual phase solves (IPM) or advances by one
Newton step (One-Shot) the dual problem of every cell at its current level.
The moment phase reconstructs ``u_s(lambda^T phi)`` at quadrature points,
applies the deterministic finite-volume update pointwise and projects the
result back onto the basis of each cell's new level.

Work is split into fixed chunks (cells for the dual phase, quadrature points
for the moment phase) whose partial results are combined in chunk order, so
results do not depend on the number of worker threads.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..closure import EntropyClosure, newton_batch
from ..errors import IllConditionedHessian, InadmissibleDualError, NonConvergence
from ..random_space import BasisSet, QuadratureRule
from .adaptivity import adapt_levels, band_start, smoothness_indicator
from .config import RefinementLadder, RetardationSchedule, SolverConfig
from .discretization import FVGrid, StencilPlan, build_grid, cell_average, check_states
from .problem import Problem

__all__ = ["MomentSolver", "RunResult", "run_ipm", "run_steady", "run_adaptive"]

Observer = Callable[["MomentSolver", dict], dict | None]


@dataclass(eq=False)
class RunResult:
    """Final state and per-iteration history of a moment-system run."""

    moments: np.ndarray
    duals: np.ndarray
    levels: np.ndarray
    history: list[dict]
    time: float
    steps: int
    total_newton_steps: int
    converged: bool
    ladder: RefinementLadder
    grid: FVGrid
    trajectory: list[np.ndarray] = field(default_factory=list)
    solver: "MomentSolver | None" = None

    @property
    def residuals(self) -> np.ndarray:
        return np.array([h["residual"] for h in self.history])


class MomentSolver:
    """State and stepping logic shared by all intrusive variants.

    ``variant`` is ``"ipm"`` (dual problem converged every step) or
    ``"osipm"`` (one Newton step per cell and step). With ``adaptive`` the
    cell levels follow the smoothness indicator; a single-level ladder makes
    this a no-op.
    """

    def __init__(
        self,
        problem: Problem,
        closure: EntropyClosure,
        ladder: RefinementLadder,
        config: SolverConfig,
        *,
        variant: str = "ipm",
        adaptive: bool = False,
        schedule: RetardationSchedule | None = None,
    ):
        if variant not in ("ipm", "osipm"):
            raise ValueError(f"unknown variant {variant!r}")
        if closure.m != problem.model.m:
            raise ValueError("closure and model disagree on the number of conserved variables")
        if ladder.p != problem.p:
            raise ValueError("ladder dimension does not match the problem's stochastic dimension")
        self.problem = problem
        self.model = problem.model
        self.closure = closure
        self.ladder = ladder
        self.config = config
        self.variant = variant
        self.adaptive = adaptive
        self.schedule = schedule
        self.opts = config.dual_options()
        self.grid = build_grid(problem.mesh, problem.boundary)
        self._pool: ThreadPoolExecutor | None = None
        self._plans: dict[bytes, StencilPlan] = {}

        n, m, L = self.grid.n_cells, self.model.m, ladder.n_levels
        self.stage = 0
        cap = schedule.cap(0, L) if schedule is not None else L
        self.levels = np.full(n, min(ladder.initial_level, cap), dtype=int)
        self.u = np.zeros((n, ladder.N_max, m))
        widths = np.full(n, self.grid.dx) if self.grid.dx is not None else None
        for lvl in np.unique(self.levels):
            cells = np.flatnonzero(self.levels == lvl)
            rung = ladder.level(lvl)
            w = None if widths is None else widths[cells]
            vals = cell_average(problem.initial_condition, self.grid.centroids[cells], w, rung.rule.points)
            self.u[cells, : rung.N] = rung.projector.project(vals)

        # Dirichlet ghosts carry fixed moments and duals at the top level
        gd = np.flatnonzero(self.grid.dirichlet)
        self.ghost_index = np.full(self.grid.n_ghosts, -1)
        self.ghost_index[gd] = np.arange(gd.size)
        top = ladder.level(L)
        farfield = problem.farfield or problem.initial_condition
        if gd.size:
            gw = None if self.grid.ghost_width is None else self.grid.ghost_width[gd]
            vals = cell_average(farfield, self.grid.ghost_position[gd], gw, top.rule.points)
            self.ghost_u = top.projector.project(vals)
            self.ghost_lam, _, _ = newton_batch(
                self.ghost_u, closure.initial_dual(self.ghost_u), closure, top.projector, self.opts
            )
        else:
            self.ghost_u = np.zeros((0, ladder.N_max, m))
            self.ghost_lam = np.zeros((0, ladder.N_max, m))

        self.lam = np.zeros_like(self.u)
        for lvl in np.unique(self.levels):
            cells = np.flatnonzero(self.levels == lvl)
            N = ladder.N(lvl)
            self.lam[cells, :N] = closure.initial_dual(self.u[cells, :N])

        self.t = 0.0
        self.step_index = 0
        self.newton_total = 0
        self.wall = 0.0
        self.history: list[dict] = []
        if variant == "osipm" and config.initial_dual_solve:
            t0 = time.perf_counter()
            self.lam, steps = self.dual_phase(self.u, self.lam, self.levels, one_shot=False)
            self.newton_total += steps
            self.wall += time.perf_counter() - t0

    # -- execution helpers -------------------------------------------------
    def _map(self, fn, items):
        if self.config.workers == 1 or len(items) <= 1:
            return [fn(it) for it in items]
        if self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self.config.workers)
        return list(self._pool.map(fn, items))

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _plan(self, targets: np.ndarray) -> StencilPlan:
        key = targets.tobytes()
        plan = self._plans.get(key)
        if plan is None:
            if len(self._plans) > 16:
                self._plans.clear()
            plan = StencilPlan(self.grid, targets)
            self._plans[key] = plan
        return plan

    # -- phases --------------------------------------------------------------
    def dual_phase(self, u, lam, levels, one_shot: bool, opts=None):
        """Return updated duals and the number of Newton steps taken."""
        opts = opts or self.opts
        lam = lam.copy()
        total = 0
        cc = self.config.cell_chunk
        for lvl in range(1, self.ladder.n_levels + 1):
            cells = np.flatnonzero(levels == lvl)
            if cells.size == 0:
                continue
            rung = self.ladder.level(lvl)
            N = rung.N
            chunks = [cells[i : i + cc] for i in range(0, cells.size, cc)]

            def work(ch, N=N, rung=rung):
                try:
                    return newton_batch(u[ch, :N], lam[ch, :N], self.closure, rung.projector, opts, one_shot)
                except IllConditionedHessian as err:
                    if err.cells is not None:
                        err.cells = ch[np.asarray(err.cells, dtype=int)]
                    raise

            for ch, (new, iters, _) in zip(chunks, self._map(work, chunks)):
                lam[ch, :N] = new
                total += int(iters.sum())
        return lam, total

    def _point_chunks(self, lvl):
        Q = self.ladder.level(lvl).rule.Q
        qc = self.config.quad_chunk
        return [slice(i, min(i + qc, Q)) for i in range(0, Q, qc)]

    def _states(self, job, lam):
        lvl, plan, s = job
        phi = self.ladder.phi_top(lvl)[s]
        Lam = np.matmul(phi, lam[plan.interior])
        if not np.all(self.closure.admissible_dual(Lam)):
            raise InadmissibleDualError(f"inadmissible duals at step {self.step_index}")
        U_int = self.closure.u_s(Lam)
        check_states(self.model, U_int, plan.interior, s.start, self.step_index)
        Ud = None
        if plan.dirichlet.size:
            Ud = self.closure.u_s(np.matmul(phi, self.ghost_lam[self.ghost_index[plan.dirichlet]]))
        U = plan.assemble(U_int, self.model, Ud)
        check_states(self.model, U[plan.interior.size :], -1 - plan.ghosts, s.start, self.step_index)
        return U, float(np.max(self.model.max_wave_speed(U)))

    def _advance(self, job, U, dt):
        lvl, plan, s = job
        rung = self.ladder.level(lvl)
        dx_dt = None if self.grid.dx is None else self.grid.dx / dt
        U_new = plan.update(self.model, U, dt, dx_dt)
        PW = self.ladder.phi_top(lvl)[s, : rung.N] * rung.rule.wf[s, None]
        return np.matmul(PW.T, U_new)

    def time_step(self, smax: float) -> float:
        if self.config.dt is not None:
            dt = self.config.dt
        else:
            hmin = float(np.min(self.grid.h))
            dt = self.config.cfl * hmin / smax if smax > 0.0 else self.config.cfl * hmin
        if self.config.t_end is not None:
            dt = min(dt, self.config.t_end - self.t)
        return dt

    def moment_phase(self, lam, new_levels, dt: float | None = None):
        """Moments at ``new_levels`` from stencil duals ``lam``; returns ``(u_new, dt)``."""
        n, m = self.u.shape[0], self.u.shape[2]
        plans = []
        for lvl in np.unique(new_levels):
            plans.append((int(lvl), self._plan(np.flatnonzero(new_levels == lvl))))
        jobs = [(lvl, plan, s) for lvl, plan in plans for s in self._point_chunks(lvl)]
        states = self._map(lambda job: self._states(job, lam), jobs)
        if dt is None:
            dt = self.time_step(max(sp for _, sp in states))
        parts = self._map(lambda k: self._advance(jobs[k], states[k][0], dt), list(range(len(jobs))))
        u_new = np.zeros((n, self.ladder.N_max, m))
        acc: dict[int, np.ndarray] = {}
        for (lvl, plan, _), part in zip(jobs, parts):
            acc[lvl] = part if lvl not in acc else acc[lvl] + part
        for lvl, plan in plans:
            u_new[plan.targets, : self.ladder.N(lvl)] = acc[lvl]
        return u_new, dt

    def indicator(self, u=None, levels=None) -> np.ndarray:
        u = self.u if u is None else u
        levels = self.levels if levels is None else levels
        S = np.zeros(levels.shape[0])
        for lvl in np.unique(levels):
            cells = np.flatnonzero(levels == lvl)
            start = band_start(self.ladder.top, self.ladder.orders, int(lvl))
            S[cells] = smoothness_indicator(u[cells], start, self.ladder.N(int(lvl)))
        return S

    def residual(self, u_new, u_old) -> float:
        diff = u_new - u_old
        if self.config.residual_mode == "zeroth_only":
            diff = diff[:, :1]
        norms = np.sqrt(np.sum(diff * diff, axis=(1, 2)))
        return float(np.sum(self.grid.volumes * norms))

    def max_level(self) -> int:
        L = self.ladder.n_levels
        return self.schedule.cap(self.stage, L) if self.schedule is not None else L

    # -- stepping ------------------------------------------------------------
    def step(self) -> dict:
        t0 = time.perf_counter()
        lam, steps = self.dual_phase(self.u, self.lam, self.levels, one_shot=self.variant == "osipm")
        new_levels = self.levels
        if self.adaptive:
            S = self.indicator()
            new_levels = adapt_levels(S, self.levels, self.ladder.delta_dec, self.ladder.delta_inc, self.max_level())
        u_new, dt = self.moment_phase(lam, new_levels)
        res = self.residual(u_new, self.u)
        # duals of coarsened cells lose their upper entries
        for lvl in np.unique(new_levels):
            cells = np.flatnonzero(new_levels == lvl)
            lam[cells, self.ladder.N(int(lvl)) :] = 0.0
        self.u, self.lam, self.levels = u_new, lam, new_levels
        self.t += dt
        self.step_index += 1
        self.newton_total += steps
        if self.schedule is not None:
            self.stage = self.schedule.stage_after(self.stage, res)
        self.wall += time.perf_counter() - t0
        rec = {
            "iteration": self.step_index,
            "pseudo_time": self.t,
            "dt": dt,
            "wall_seconds": self.wall,
            "residual": res,
            "newton_steps": steps,
            "mean_level": float(np.mean(self.levels)),
            "max_level": int(np.max(self.levels)),
        }
        self.history.append(rec)
        return rec

    def result(self, converged: bool, trajectory=None) -> RunResult:
        return RunResult(
            moments=self.u.copy(),
            duals=self.lam.copy(),
            levels=self.levels.copy(),
            history=list(self.history),
            time=self.t,
            steps=self.step_index,
            total_newton_steps=self.newton_total,
            converged=converged,
            ladder=self.ladder,
            grid=self.grid,
            trajectory=trajectory or [],
            solver=self,
        )

    def run_unsteady(self, observer: Observer | None = None, store_trajectory: bool = False) -> RunResult:
        cfg = self.config
        if cfg.t_end is None and cfg.n_steps is None:
            raise ValueError("unsteady run needs t_end or n_steps")
        traj = [self.u.copy()] if store_trajectory else []
        try:
            while True:
                if cfg.n_steps is not None and self.step_index >= cfg.n_steps:
                    break
                if cfg.t_end is not None and self.t >= cfg.t_end * (1.0 - 1e-14):
                    break
                if self.step_index >= cfg.max_steps:
                    raise NonConvergence(f"time horizon not reached after {cfg.max_steps} steps", report=self.history)
                rec = self.step()
                if observer is not None:
                    rec.update(observer(self, rec) or {})
                if store_trajectory:
                    traj.append(self.u.copy())
        finally:
            self.close()
        return self.result(True, traj)

    def run_steady(self, observer: Observer | None = None, store_trajectory: bool = False) -> RunResult:
        cfg = self.config
        traj = [self.u.copy()] if store_trajectory else []
        try:
            while True:
                if self.step_index >= cfg.max_steps:
                    raise NonConvergence(
                        f"steady residual above {cfg.eps:g} after {cfg.max_steps} steps", report=self.history
                    )
                rec = self.step()
                if observer is not None:
                    rec.update(observer(self, rec) or {})
                if store_trajectory:
                    traj.append(self.u.copy())
                final_cap = self.schedule is None or self.max_level() == self.ladder.n_levels
                if rec["residual"] <= cfg.eps and final_cap:
                    break
        finally:
            self.close()
        return self.result(True, traj)


def _single(basis: BasisSet, rule: QuadratureRule) -> RefinementLadder:
    return RefinementLadder.single(basis.M, rule, basis.p)


def run_ipm(
    problem: Problem,
    closure: EntropyClosure,
    basis: BasisSet,
    rule: QuadratureRule,
    config: SolverConfig,
    observer: Observer | None = None,
    store_trajectory: bool = False,
) -> RunResult:
    """Time-accurate IPM (stochastic Galerkin with the quadratic closure) up to ``t_end``/``n_steps``."""
    solver = MomentSolver(problem, closure, _single(basis, rule), config, variant="ipm")
    return solver.run_unsteady(observer, store_trajectory)


def run_steady(
    problem: Problem,
    closure: EntropyClosure,
    basis: BasisSet,
    rule: QuadratureRule,
    config: SolverConfig,
    variant: str = "ipm",
    observer: Observer | None = None,
) -> RunResult:
    """Iterate in pseudo-time until the residual drops to ``config.eps``."""
    solver = MomentSolver(problem, closure, _single(basis, rule), config, variant=variant)
    return solver.run_steady(observer)


def run_adaptive(
    problem: Problem,
    closure: EntropyClosure,
    ladder: RefinementLadder,
    config: SolverConfig,
    schedule: RetardationSchedule | None = None,
    variant: str = "ipm",
    steady: bool | None = None,
    observer: Observer | None = None,
    store_trajectory: bool = False,
) -> RunResult:
    """Adaptive IPM / One-Shot IPM, optionally with refinement retardation.

    The run is steady unless ``t_end`` or ``n_steps`` is configured.
    """
    if steady is None:
        steady = config.t_end is None and config.n_steps is None
    if schedule is not None and not steady:
        raise ValueError("refinement retardation applies to steady runs only")
    solver = MomentSolver(problem, closure, ladder, config, variant=variant, adaptive=True, schedule=schedule)
    if steady:
        return solver.run_steady(observer, store_trajectory)
    return solver.run_unsteady(observer, store_trajectory)
