"""Solver configuration, refinement ladders and retardation schedules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..closure import DualOptions, Projector
from ..random_space import BasisSet, QuadratureRule, build_total_degree_basis, eval_basis, is_nested

__all__ = ["SolverConfig", "Level", "RefinementLadder", "RetardationSchedule"]


@dataclass
class SolverConfig:
    """Time-stepping and dual-solver controls.

    Exactly one of ``t_end`` / ``n_steps`` bounds an unsteady run; steady runs
    stop once the residual drops to ``eps`` or fail after ``max_steps``.
    ``dt`` fixes the time step instead of deriving it from ``cfl``.
    """

    cfl: float = 0.5
    tau: float = 1e-7
    eps: float = 1e-6
    t_end: float | None = None
    n_steps: int | None = None
    max_steps: int = 100_000
    residual_mode: str = "all_moments"
    dt: float | None = None
    max_newton: int = 1000
    cond_limit: float = 1e14
    damping: bool = True
    workers: int = 1
    cell_chunk: int = 256
    quad_chunk: int = 64
    initial_dual_solve: bool = True

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.tau <= 0.0 or self.eps <= 0.0:
            raise ValueError("tau and eps must be positive")
        if self.residual_mode not in ("all_moments", "zeroth_only"):
            raise ValueError(f"unknown residual mode {self.residual_mode!r}")
        if self.dt is not None and self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.workers < 1 or self.cell_chunk < 1 or self.quad_chunk < 1:
            raise ValueError("workers and chunk sizes must be positive")

    def dual_options(self) -> DualOptions:
        return DualOptions(
            tau=self.tau, max_iter=self.max_newton, cond_limit=self.cond_limit, damping=self.damping
        )


@dataclass(eq=False)
class Level:
    """One rung of a refinement ladder: a basis truncation and its quadrature."""

    M: int
    basis: BasisSet
    rule: QuadratureRule
    projector: Projector

    @property
    def N(self) -> int:
        return self.basis.N


@dataclass(eq=False)
class RefinementLadder:
    """Nested sequence of (degree, quadrature) pairs with adaptation thresholds.

    Levels are numbered from 1. A cell's moments at level ``l`` are the leading
    ``N_l`` entries of the top-level layout. With a single level no adaptation
    ever happens and the thresholds are irrelevant.
    """

    orders: Sequence[int]
    rules: Sequence[QuadratureRule]
    p: int
    delta_dec: float = 1e-5
    delta_inc: float = 1e-4
    initial_level: int = 1
    levels: list[Level] = field(init=False)
    top: BasisSet = field(init=False)

    def __post_init__(self):
        orders = [int(M) for M in self.orders]
        if len(orders) == 0 or len(orders) != len(self.rules):
            raise ValueError("ladder needs one quadrature rule per order")
        if any(b <= a for a, b in zip(orders, orders[1:])):
            raise ValueError("ladder orders must be strictly increasing")
        if not (self.delta_dec > 0 and self.delta_inc > 0):
            raise ValueError("refinement thresholds must be positive")
        if self.delta_dec > self.delta_inc:
            raise ValueError("delta_dec must not exceed delta_inc")
        for a, b in zip(self.rules, self.rules[1:]):
            if not is_nested(a, b):
                raise ValueError("ladder quadrature rules must be nested")
        if not 1 <= self.initial_level <= len(orders):
            raise ValueError("initial level out of range")
        self.orders = orders
        self.top = build_total_degree_basis(orders[-1], self.p)
        self.levels = []
        for M, rule in zip(orders, self.rules):
            if rule.p != self.p:
                raise ValueError("quadrature dimension does not match p")
            basis = self.top.truncated(M)
            self.levels.append(Level(M, basis, rule, Projector.build(basis, rule)))
        # top-level basis evaluated at each level's points (for padded duals)
        self._phi_top = [eval_basis(self.top, lv.rule.points) for lv in self.levels]

    @classmethod
    def single(cls, M: int, rule: QuadratureRule, p: int) -> "RefinementLadder":
        return cls([M], [rule], p)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def N_max(self) -> int:
        return self.top.N

    def N(self, level: int) -> int:
        return self.levels[level - 1].N

    def level(self, level: int) -> Level:
        return self.levels[level - 1]

    def phi_top(self, level: int) -> np.ndarray:
        return self._phi_top[level - 1]

    def level_for_order(self, M: int) -> int:
        return self.orders.index(int(M)) + 1


@dataclass
class RetardationSchedule:
    """Pairs ``(eps_l, level_l)``: the refinement level is capped at ``level_l``
    until the residual drops below ``eps_l``, then the next pair applies.

    After the last threshold the cap is lifted to the top of the ladder.
    """

    thresholds: Sequence[float]
    max_levels: Sequence[int]

    def __post_init__(self):
        self.thresholds = [float(e) for e in self.thresholds]
        self.max_levels = [int(m) for m in self.max_levels]
        if len(self.max_levels) != len(self.thresholds) or not self.thresholds:
            raise ValueError("need one max level per residual threshold")
        if any(b >= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("retardation thresholds must be decreasing")
        if any(b < a for a, b in zip(self.max_levels, self.max_levels[1:])):
            raise ValueError("retardation max levels must be nondecreasing")
        if any(e <= 0 for e in self.thresholds) or min(self.max_levels) < 1:
            raise ValueError("thresholds must be positive and levels >= 1")

    @classmethod
    def from_orders(cls, ladder: RefinementLadder, orders: Sequence[int], thresholds: Sequence[float]):
        """Build from truncation orders, e.g. orders (2, 4, 5, 8) with four thresholds."""
        return cls(thresholds, [ladder.level_for_order(M) for M in orders])

    def stage_after(self, stage: int, residual: float) -> int:
        """Advance one stage when the residual lies below the current threshold."""
        if stage < len(self.thresholds) and residual < self.thresholds[stage]:
            return stage + 1
        return stage

    def cap(self, stage: int, n_levels: int) -> int:
        if stage < len(self.max_levels):
            return min(self.max_levels[stage], n_levels)
        return n_levels
