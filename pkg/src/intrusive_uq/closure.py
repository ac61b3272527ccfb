"""Entropy closures and the dual (entropy-minimization) Newton solver.

A moment matrix ``u_hat`` of shape ``(N, m)`` is mapped to dual variables
``lam`` of the same shape by finding the root of

    grad L(lam; u_hat) = <u_s(lam^T phi) phi^T>_Q^T - u_hat.

All routines accept a single cell ``(N, m)`` or a batch ``(c, N, m)``. The
flattened Newton unknown uses row-major order, i.e. entry ``(i, a)`` of
``lam`` sits at position ``i * m + a``.

Newton steps are globalized by backtracking on ``0.5 * ||grad L||^2``; the
Legendre transform itself is never evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedHessian, InadmissibleDualError, LineSearchFailure, NonConvergence
from .random_space import BasisSet, QuadratureRule, eval_basis

__all__ = [
    "EntropyClosure",
    "QuadraticClosure",
    "EulerEntropyClosure",
    "quadratic_closure",
    "euler_entropy_closure",
    "Projector",
    "DualOptions",
    "DualSolveReport",
    "lagrangian_gradient",
    "hessian",
    "stopping_quantity",
    "dual_step",
    "solve_dual",
]


class EntropyClosure:
    """Interface shared by the closures. Arrays carry the state on the last axis."""

    m: int
    name: str = "closure"

    def entropy(self, u):
        raise NotImplementedError

    def grad_s(self, u):
        raise NotImplementedError

    def u_s(self, lam):
        raise NotImplementedError

    def jac_u_s(self, lam):
        raise NotImplementedError

    def admissible_dual(self, lam) -> np.ndarray:
        return np.all(np.isfinite(lam), axis=-1)

    def initial_dual(self, u_hat: np.ndarray) -> np.ndarray:
        """Starting guess whose reconstruction is the cell-mean state."""
        lam = np.zeros_like(u_hat)
        lam[..., 0, :] = self.grad_s(u_hat[..., 0, :])
        return lam


class QuadraticClosure(EntropyClosure):
    """``s(u) = u.u / 2``; IPM with this entropy is stochastic Galerkin."""

    name = "quadratic"

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("m must be positive")
        self.m = m

    def entropy(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * np.sum(u * u, axis=-1)

    def grad_s(self, u):
        return np.array(u, dtype=float)

    def u_s(self, lam):
        return np.array(lam, dtype=float)

    def jac_u_s(self, lam):
        lam = np.asarray(lam)
        return np.broadcast_to(np.eye(self.m), lam.shape + (self.m,)).copy()

    def initial_dual(self, u_hat):
        return np.array(u_hat, dtype=float)


def quadratic_closure(m: int) -> QuadraticClosure:
    return QuadraticClosure(m)


class EulerEntropyClosure(EntropyClosure):
    """Thermodynamic entropy closure for the Euler equations in ``d`` dimensions.

    State ``u = (rho, m_1..m_d, E)``, entropy
    ``s(u) = -rho * ln(rho**-gamma * (E - |m|^2 / (2 rho)))``.
    The inverse gradient ``u_s`` is explicit; every dual with a negative last
    component maps to a state with positive density and pressure. The sign of
    the ``gamma`` term in the exponent of ``alpha`` is the one that makes
    ``u_s`` the exact inverse of ``grad_s`` below.
    """

    name = "euler"

    def __init__(self, gamma: float = 1.4, d: int = 2):
        if gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        self.gamma = float(gamma)
        self.d = d
        self.m = d + 2

    def _split(self, u):
        u = np.asarray(u, dtype=float)
        rho = u[..., 0]
        mom = u[..., 1:-1]
        E = u[..., -1]
        return rho, mom, E

    def entropy(self, u):
        rho, mom, E = self._split(u)
        eps = E - 0.5 * np.sum(mom * mom, axis=-1) / rho
        return -rho * np.log(rho ** (-self.gamma) * eps)

    def grad_s(self, u):
        rho, mom, E = self._split(u)
        msq = np.sum(mom * mom, axis=-1)
        eps = E - 0.5 * msq / rho
        out = np.empty(np.shape(u))
        out[..., 0] = -np.log(rho ** (-self.gamma) * eps) + self.gamma - 0.5 * msq / (rho * eps)
        out[..., 1:-1] = mom / eps[..., None]
        out[..., -1] = -rho / eps
        return out

    def admissible_dual(self, lam):
        lam = np.asarray(lam)
        return (lam[..., -1] < 0.0) & np.all(np.isfinite(lam), axis=-1)

    def _alpha(self, lam):
        g = self.gamma
        L1 = lam[..., 0]
        v = lam[..., 1:-1]
        L = lam[..., -1]
        q = np.sum(v * v, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            A = (q - 2.0 * L1 * L + 2.0 * L * g) / (2.0 * L * (1.0 - g)) + np.log(-L) / (1.0 - g)
            alpha = np.exp(A)
        return alpha, v, L, q

    def u_s(self, lam):
        lam = np.asarray(lam, dtype=float)
        if not np.all(self.admissible_dual(lam)):
            raise InadmissibleDualError("Euler ansatz requires a negative energy dual")
        alpha, v, L, q = self._alpha(lam)
        out = np.empty(lam.shape)
        out[..., 0] = alpha
        out[..., 1:-1] = -v * (alpha / L)[..., None]
        out[..., -1] = alpha * (q - 2.0 * L) / (2.0 * L * L)
        if not np.all(np.isfinite(out)):
            raise InadmissibleDualError("Euler ansatz overflowed")
        return out

    def jac_u_s(self, lam):
        lam = np.asarray(lam, dtype=float)
        if not np.all(self.admissible_dual(lam)):
            raise InadmissibleDualError("Euler ansatz requires a negative energy dual")
        g = self.gamma
        d = self.d
        m = self.m
        alpha, v, L, q = self._alpha(lam)
        # gradient of ln(alpha)
        dA = np.empty(lam.shape)
        dA[..., 0] = 1.0 / (g - 1.0)
        dA[..., 1:-1] = v / (L * (1.0 - g))[..., None]
        dA[..., -1] = (-q / (2.0 * L * L) + 1.0 / L) / (1.0 - g)
        J = np.zeros(lam.shape + (m,))
        J[..., 0, :] = alpha[..., None] * dA
        mom = -v * (alpha / L)[..., None]
        J[..., 1:-1, :] = mom[..., :, None] * dA[..., None, :]
        for i in range(d):
            J[..., 1 + i, 1 + i] -= alpha / L
            J[..., 1 + i, -1] += v[..., i] * alpha / (L * L)
        E = alpha * (q - 2.0 * L) / (2.0 * L * L)
        J[..., -1, :] = E[..., None] * dA
        J[..., -1, 1:-1] += v * (alpha / (L * L))[..., None]
        J[..., -1, -1] += alpha * (-q / L**3 + 1.0 / (L * L))
        return 0.5 * (J + np.swapaxes(J, -1, -2))


def euler_entropy_closure(gamma: float = 1.4, d: int = 2) -> EulerEntropyClosure:
    return EulerEntropyClosure(gamma, d)


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Projector:
    """Basis values at quadrature points, precomputed once per (basis, rule)."""

    phi: np.ndarray  # (Q, N)
    wf: np.ndarray  # (Q,)
    label: str = ""

    @classmethod
    def build(cls, basis: BasisSet, rule: QuadratureRule) -> "Projector":
        return cls(eval_basis(basis, rule.points), rule.wf, rule.describe())

    @property
    def N(self) -> int:
        return self.phi.shape[1]

    @property
    def Q(self) -> int:
        return self.phi.shape[0]

    def reconstruct(self, lam: np.ndarray) -> np.ndarray:
        """``lam^T phi`` at every point: ``(..., N, m) -> (..., Q, m)``."""
        return np.matmul(self.phi, lam)

    def project(self, values: np.ndarray) -> np.ndarray:
        """``<values phi^T>_Q^T``: ``(..., Q, m) -> (..., N, m)``."""
        return np.matmul((self.phi * self.wf[:, None]).T, values)


@dataclass
class DualOptions:
    tau: float = 1e-7
    max_iter: int = 1000
    max_halvings: int = 30
    armijo: float = 1e-4
    cond_limit: float = 1e14
    damping: bool = True


@dataclass
class DualSolveReport:
    """Outcome of a (batched) dual solve.

    For a batch, ``iterations`` is the maximum over cells, ``newton_steps``
    the total, and ``final_gradient_norm`` the maximum stopping quantity.
    """

    iterations: int
    final_gradient_norm: float
    converged: bool
    newton_steps: int = 0
    tau: float = 0.0


def stopping_quantity(grad: np.ndarray) -> np.ndarray:
    """Sum over conserved variables of the Euclidean norm of each moment column."""
    return np.sum(np.sqrt(np.sum(grad * grad, axis=-2)), axis=-1)


def _as_batch(a):
    a = np.asarray(a, dtype=float)
    return (a[None], True) if a.ndim == 2 else (a, False)


def _gradient(lam, u_hat, closure, proj):
    Lam = proj.reconstruct(lam)
    if not np.all(closure.admissible_dual(Lam)):
        raise InadmissibleDualError("dual variables inadmissible at a quadrature point")
    return proj.project(closure.u_s(Lam)) - u_hat


def _hessian(lam, closure, proj):
    Lam = proj.reconstruct(lam)
    J = closure.jac_u_s(Lam)  # (c, Q, m, m)
    W = J * proj.wf[None, :, None, None]
    P = proj.phi[:, :, None] * proj.phi[:, None, :]  # (Q, N, N)
    c, _, m, _ = W.shape
    N = proj.N
    H = np.tensordot(W, P, axes=([1], [0]))  # (c, m, m, N, N)
    H = H.transpose(0, 3, 1, 4, 2).reshape(c, N * m, N * m)
    return 0.5 * (H + np.swapaxes(H, 1, 2))


def _factor_check(H, opts: DualOptions, label: str):
    bad = ~np.all(np.isfinite(H), axis=(1, 2))
    if np.any(bad):
        raise IllConditionedHessian("non-finite Hessian entries", rule=label, cells=np.flatnonzero(bad))
    try:
        Lc = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        failed = []
        for k in range(H.shape[0]):
            try:
                np.linalg.cholesky(H[k])
            except np.linalg.LinAlgError:
                failed.append(k)
        raise IllConditionedHessian(
            "Cholesky factorization of the dual Hessian failed", rule=label, cells=np.array(failed)
        ) from None
    diag = np.abs(np.diagonal(Lc, axis1=1, axis2=2))
    est = (diag.max(axis=1) / diag.min(axis=1)) ** 2
    if np.any(est > opts.cond_limit):
        raise IllConditionedHessian(
            f"dual Hessian condition estimate {est.max():.3e} exceeds {opts.cond_limit:.1e}",
            rule=label,
            cells=np.flatnonzero(est > opts.cond_limit),
        )
    return Lc


def _newton_direction(lam, g, closure, proj, opts):
    H = _hessian(lam, closure, proj)
    Lc = _factor_check(H, opts, proj.label)
    c, N, m = g.shape
    rhs = g.reshape(c, N * m, 1)
    y = np.linalg.solve(Lc, rhs)
    x = np.linalg.solve(np.swapaxes(Lc, 1, 2), y)
    return x.reshape(c, N, m)


def _try_step(lam, delta, t, u_hat, closure, proj):
    trial = lam - t * delta
    Lam = proj.reconstruct(trial)
    ok = np.all(closure.admissible_dual(Lam), axis=-1)
    gt = np.full_like(u_hat, np.inf)
    if np.any(ok):
        gt[ok] = proj.project(closure.u_s(Lam[ok])) - u_hat[ok]
    return trial, gt, ok


def _damped_step(lam, g, u_hat, closure, proj, opts: DualOptions):
    """One globalized Newton step for every cell of the batch."""
    delta = _newton_direction(lam, g, closure, proj, opts)
    g2 = np.sum(g * g, axis=(1, 2))
    scale = np.maximum(1.0, np.sqrt(np.sum(u_hat * u_hat, axis=(1, 2))))
    floor = (1e-13 * scale) ** 2
    new_lam = lam.copy()
    new_g = g.copy()
    pending = np.ones(lam.shape[0], dtype=bool)
    t = 1.0
    for _ in range(opts.max_halvings + 1):
        idx = np.flatnonzero(pending)
        trial, gt, ok = _try_step(lam[idx], delta[idx], t, u_hat[idx], closure, proj)
        gt2 = np.sum(gt * gt, axis=(1, 2))
        if t == 1.0:
            accept = ok & ((gt2 < g2[idx]) | (gt2 <= floor[idx]))
        else:
            accept = ok & (gt2 <= (1.0 - 2.0 * opts.armijo * t) * g2[idx])
        if not opts.damping:
            accept = ok
        acc = idx[accept]
        new_lam[acc] = trial[accept]
        new_g[acc] = gt[accept]
        pending[acc] = False
        if not opts.damping and not np.all(ok):
            raise InadmissibleDualError("undamped Newton step left the admissible dual domain")
        if not np.any(pending):
            return new_lam, new_g
        t *= 0.5
    raise LineSearchFailure(
        f"no acceptable dual step after {opts.max_halvings} halvings in {pending.sum()} cell(s)"
    )


def lagrangian_gradient(lam, u_hat, closure: EntropyClosure, basis: BasisSet, rule: QuadratureRule):
    """``<u_s(lam^T phi) phi^T>_Q^T - u_hat``."""
    lb, single = _as_batch(lam)
    ub, _ = _as_batch(u_hat)
    g = _gradient(lb, ub, closure, Projector.build(basis, rule))
    return g[0] if single else g


def hessian(lam, closure: EntropyClosure, basis: BasisSet, rule: QuadratureRule):
    """``<grad u_s(lam^T phi) (x) phi phi^T>_Q`` as an ``(N m, N m)`` matrix."""
    lb, single = _as_batch(lam)
    H = _hessian(lb, closure, Projector.build(basis, rule))
    return H[0] if single else H


def dual_step(lam, u_hat, closure, basis, rule, options: DualOptions | None = None, projector: Projector | None = None):
    """One (possibly damped) Newton step of the dual problem."""
    opts = options or DualOptions()
    proj = projector or Projector.build(basis, rule)
    lb, single = _as_batch(lam)
    ub, _ = _as_batch(u_hat)
    g = _gradient(lb, ub, closure, proj)
    out, _ = _damped_step(lb, g, ub, closure, proj, opts)
    return out[0] if single else out


def newton_batch(u_hat, lam, closure, proj: Projector, opts: DualOptions, one_shot: bool = False):
    """Batched Newton iteration on ``(c, N, m)`` arrays.

    Returns the new duals, per-cell iteration counts and per-cell final
    stopping quantities. With ``one_shot`` exactly one step is taken per cell
    and no convergence test is made.
    """
    lam = np.array(lam, dtype=float)
    c = lam.shape[0]
    iters = np.zeros(c, dtype=int)
    g = _gradient(lam, u_hat, closure, proj)
    if one_shot:
        lam, g = _damped_step(lam, g, u_hat, closure, proj, opts)
        iters[:] = 1
        return lam, iters, stopping_quantity(g)
    norms = stopping_quantity(g)
    active = np.flatnonzero(norms >= opts.tau)
    while active.size:
        if np.any(iters[active] >= opts.max_iter):
            rep = DualSolveReport(int(iters.max()), float(norms.max()), False, int(iters.sum()), opts.tau)
            raise NonConvergence(f"dual Newton exceeded {opts.max_iter} iterations", report=rep)
        la, ga = _damped_step(lam[active], g[active], u_hat[active], closure, proj, opts)
        lam[active] = la
        g[active] = ga
        iters[active] += 1
        norms[active] = stopping_quantity(ga)
        active = active[norms[active] >= opts.tau]
    return lam, iters, norms


def solve_dual(
    u_hat,
    closure: EntropyClosure,
    basis: BasisSet,
    rule: QuadratureRule,
    tau: float = 1e-7,
    lam_init=None,
    options: DualOptions | None = None,
):
    """Newton iteration until the summed column norms of grad L drop below ``tau``.

    Returns ``(lam, DualSolveReport)``. Raises :class:`NonConvergence` when the
    iteration cap is hit and :class:`IllConditionedHessian` when the Hessian
    cannot be factorized.
    """
    opts = options or DualOptions()
    opts = DualOptions(**{**opts.__dict__, "tau": tau})
    ub, single = _as_batch(u_hat)
    if lam_init is None:
        lb = closure.initial_dual(ub)
    else:
        lb, _ = _as_batch(lam_init)
    proj = Projector.build(basis, rule)
    lam, iters, norms = newton_batch(ub, lb, closure, proj, opts)
    report = DualSolveReport(int(iters.max()), float(norms.max()), bool(np.all(norms < tau)), int(iters.sum()), tau)
    return (lam[0] if single else lam), report
