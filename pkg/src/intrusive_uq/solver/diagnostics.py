"""Finite-difference Jacobian of the One-Shot iteration at a fixed point."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import PreconditionError
from .engine import MomentSolver, RunResult

__all__ = ["OneShotJacobianReport", "oneshot_map", "oneshot_jacobian_spectral_radius"]


@dataclass(eq=False)
class OneShotJacobianReport:
    rho: float
    rho_eig: float
    norm_dlam_d: float
    norm_dlam_c: float
    jacobian: np.ndarray
    n_dual: int
    fixed_point_defect: float


def _unknowns(solver: MomentSolver):
    """Flat indices of the active (level-truncated) dual and moment entries."""
    n, Nmax, m = solver.u.shape
    mask = np.zeros((n, Nmax, m), dtype=bool)
    for j, lvl in enumerate(solver.levels):
        mask[j, : solver.ladder.N(int(lvl))] = True
    return np.flatnonzero(mask.ravel())


def oneshot_map(solver: MomentSolver, lam: np.ndarray, u: np.ndarray, dt: float):
    """``(lambda, u) -> (d(lambda, u), c(d(lambda, u)))`` with a frozen time step and no damping."""
    opts = replace(solver.opts, damping=False)
    lam_new, _ = solver.dual_phase(u, lam, solver.levels, one_shot=True, opts=opts)
    u_new, _ = solver.moment_phase(lam_new, solver.levels, dt=dt)
    return lam_new, u_new


def oneshot_jacobian_spectral_radius(
    result: RunResult | MomentSolver,
    h: float = 1e-6,
    defect_tol: float = 1e-6,
    power_iterations: int = 400,
    seed: int = 0,
) -> OneShotJacobianReport:
    """Spectral radius of the One-Shot Jacobian at a converged steady state.

    The unknowns are all active dual entries followed by all active moment
    entries. Columns are central differences with step ``h * max(1, |z|)``.
    The radius is estimated by power iteration on ``J^2`` and cross-checked
    against a dense eigenvalue solve.
    """
    solver = result.solver if isinstance(result, RunResult) else result
    if solver is None:
        raise PreconditionError("result carries no solver state")
    idx = _unknowns(solver)
    shape = solver.u.shape
    k = idx.size
    dt = solver.history[-1]["dt"] if solver.history else None
    if dt is None:
        raise PreconditionError("no completed step to take the time step from")

    def F(z):
        lam = np.zeros(shape)
        u = np.zeros(shape)
        lam.ravel()[idx] = z[:k]
        u.ravel()[idx] = z[k:]
        ln, un = oneshot_map(solver, lam, u, dt)
        return np.concatenate([ln.ravel()[idx], un.ravel()[idx]])

    z0 = np.concatenate([solver.lam.ravel()[idx], solver.u.ravel()[idx]])
    F0 = F(z0)
    defect = float(np.linalg.norm(F0 - z0) / max(1.0, np.linalg.norm(z0)))
    if defect > defect_tol:
        raise PreconditionError(f"state is not a One-Shot fixed point (relative defect {defect:.2e})")
    J = np.empty((2 * k, 2 * k))
    for c in range(2 * k):
        step = h * max(1.0, abs(z0[c]))
        zp = z0.copy()
        zm = z0.copy()
        zp[c] += step
        zm[c] -= step
        J[:, c] = (F(zp) - F(zm)) / (2.0 * step)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(2 * k)
    v /= np.linalg.norm(v)
    logs = []
    for _ in range(power_iterations):
        w = J @ (J @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            logs.append(-np.inf)
            break
        logs.append(np.log(nrm))
        v = w / nrm
    tail = np.array(logs[len(logs) // 2 :])
    rho = float(np.exp(np.mean(tail) / 2.0)) if np.all(np.isfinite(tail)) else 0.0
    rho_eig = float(np.max(np.abs(np.linalg.eigvals(J))))
    return OneShotJacobianReport(
        rho=rho,
        rho_eig=rho_eig,
        norm_dlam_d=float(np.linalg.norm(J[:k, :k], 2)),
        norm_dlam_c=float(np.linalg.norm(J[k:, :k], 2)),
        jacobian=J,
        n_dual=k,
        fixed_point_defect=defect,
    )
