"""Polynomial chaos bases and quadrature on the uniform hypercube [-1, 1]^p.

The basis is the tensorized orthonormal Legendre family, truncated by total
degree. Multi-indices are stored in graded lexicographic order: ascending
total degree, and within one degree descending lexicographic order of the
index tuple, so ``(1, 0)`` precedes ``(0, 1)``. Because the order is graded,
the basis of total degree ``M'`` is always the leading ``N'`` entries of a
basis of degree ``M >= M'``; adaptive solvers rely on this.

Quadrature weights are stored with respect to Lebesgue measure, next to the
density values ``f(xi) = 2**-p``, so that ``sum(w * f) == 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

MultiIndex = tuple[int, ...]

__all__ = [
    "MultiIndex",
    "BasisSet",
    "QuadratureRule",
    "build_total_degree_basis",
    "legendre_orthonormal",
    "eval_basis",
    "clenshaw_curtis_1d",
    "gauss_legendre_1d",
    "gauss_lobatto_1d",
    "cc_points",
    "tensor_quadrature",
    "sparse_quadrature",
    "bracket",
    "is_nested",
]


def _total_degree_indices(M: int, p: int) -> list[MultiIndex]:
    out: list[MultiIndex] = []
    for deg in range(M + 1):
        same = [c for c in itertools.product(range(deg + 1), repeat=p) if sum(c) == deg]
        same.sort(reverse=True)
        out.extend(same)
    return out


@dataclass(frozen=True)
class BasisSet:
    """Total-degree orthonormal Legendre basis in ``p`` variables."""

    p: int
    M: int
    indices: tuple[MultiIndex, ...]

    @property
    def N(self) -> int:
        return len(self.indices)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([sum(i) for i in self.indices], dtype=int)

    def count_up_to(self, degree: int) -> int:
        """Number of leading basis functions with total degree <= ``degree``."""
        if degree < 0:
            return 0
        return math.comb(degree + self.p, self.p)

    def truncated(self, M: int) -> "BasisSet":
        if M > self.M:
            raise ValueError(f"cannot truncate degree {self.M} basis to {M}")
        return BasisSet(self.p, M, self.indices[: self.count_up_to(M)])

    def __call__(self, xi) -> np.ndarray:
        return eval_basis(self, xi)


def build_total_degree_basis(M: int, p: int) -> BasisSet:
    """All multi-indices with ``|i| <= M`` in graded lexicographic order.

    >>> build_total_degree_basis(9, 2).N
    55
    """
    if M < 0 or p < 1:
        raise ValueError(f"need M >= 0 and p >= 1, got M={M}, p={p}")
    idx = tuple(_total_degree_indices(M, p))
    assert len(idx) == math.comb(M + p, p)
    return BasisSet(p=p, M=M, indices=idx)


def legendre_orthonormal(x: np.ndarray, M: int) -> np.ndarray:
    """Orthonormal Legendre polynomials of degree 0..M w.r.t. density 1/2.

    Returns an array of shape ``x.shape + (M + 1,)``.
    """
    x = np.asarray(x, dtype=float)
    P = np.empty(x.shape + (M + 1,))
    P[..., 0] = 1.0
    if M >= 1:
        P[..., 1] = x
    for n in range(1, M):
        P[..., n + 1] = ((2 * n + 1) * x * P[..., n] - n * P[..., n - 1]) / (n + 1)
    return P * np.sqrt(2.0 * np.arange(M + 1) + 1.0)


def eval_basis(basis: BasisSet, xi) -> np.ndarray:
    """Evaluate all basis functions at ``xi``.

    ``xi`` may be a single point of shape ``(p,)`` (result ``(N,)``) or a batch
    of shape ``(Q, p)`` (result ``(Q, N)``).
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = np.atleast_2d(xi)
    if pts.shape[-1] != basis.p:
        raise ValueError(f"expected points in R^{basis.p}, got shape {xi.shape}")
    if np.any(np.abs(pts) > 1.0 + 1e-12):
        raise ValueError("xi outside the support [-1, 1]^p of the uniform density")
    uni = legendre_orthonormal(pts, basis.M)  # (Q, p, M+1)
    idx = np.asarray(basis.indices, dtype=int)  # (N, p)
    vals = np.ones((pts.shape[0], basis.N))
    for n in range(basis.p):
        vals *= uni[:, n, idx[:, n]]
    return vals[0] if single else vals


# ---------------------------------------------------------------------------
# univariate rules (Lebesgue weights on [-1, 1])


def cc_points(level: int) -> int:
    """Number of Clenshaw-Curtis nodes at ``level``: 1, 3, 5, 9, 17, ..."""
    if level < 0:
        raise ValueError("Clenshaw-Curtis level must be >= 0")
    return 1 if level == 0 else 2**level + 1


def clenshaw_curtis_1d(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Nested Clenshaw-Curtis rule with ``2**level + 1`` nodes (1 node at level 0).

    Nodes are computed as ``cos(pi * j / 2**level)`` so that every node of a
    coarser level is bit-identical to the corresponding finer-level node.
    """
    if level == 0:
        return np.zeros(1), np.full(1, 2.0)
    n = cc_points(level)
    j = np.arange(n)
    theta = np.pi * j / 2**level
    x = np.cos(theta)
    half = n // 2
    x[half] = 0.0
    x[n - 1 - j[:half]] = -x[:half]
    # Trefethen, clencurt
    w = np.zeros(n)
    v = np.ones(n - 2)
    nm = n - 1
    interior = theta[1:-1]
    if nm % 2 == 0:
        w[0] = w[-1] = 1.0 / (nm**2 - 1)
        for k in range(1, nm // 2):
            v -= 2.0 * np.cos(2 * k * interior) / (4 * k**2 - 1)
        v -= np.cos(nm * interior) / (nm**2 - 1)
    else:
        w[0] = w[-1] = 1.0 / nm**2
        for k in range(1, (nm - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * interior) / (4 * k**2 - 1)
    w[1:-1] = 2.0 * v / nm
    # descending nodes from cos(); store ascending
    return x[::-1].copy(), w[::-1].copy()


def gauss_legendre_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise ValueError("Gauss-Legendre needs at least one point")
    return np.polynomial.legendre.leggauss(n)


def gauss_lobatto_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Lobatto-Legendre rule with ``n >= 2`` nodes (exact to degree 2n-3)."""
    if n < 2:
        raise ValueError("Gauss-Lobatto needs at least two points")
    leg = np.polynomial.legendre
    c = np.zeros(n)
    c[-1] = 1.0
    inner = np.sort(leg.legroots(leg.legder(c))) if n > 2 else np.zeros(0)
    x = np.concatenate([[-1.0], inner, [1.0]])
    w = 2.0 / (n * (n - 1) * leg.legval(x, c) ** 2)
    return x, w


_FAMILIES: dict[str, Callable[[int], tuple[np.ndarray, np.ndarray]]] = {
    "clenshaw_curtis": clenshaw_curtis_1d,
    "gauss_legendre": gauss_legendre_1d,
    "gauss_lobatto": gauss_lobatto_1d,
}


# ---------------------------------------------------------------------------
# multivariate rules


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Points, Lebesgue weights and density values on [-1, 1]^p.

    ``nesting`` maps each point index of the next-coarser rule of the same
    family into this rule's point indices; it is empty for non-nested
    families. ``level`` is a per-dimension tuple for tensor rules and an int
    for sparse rules.
    """

    family: str
    points: np.ndarray
    weights: np.ndarray
    density_values: np.ndarray
    level: object
    nesting: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    kind: str = "tensor"

    @property
    def Q(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]

    @property
    def wf(self) -> np.ndarray:
        """Weights times density, the coefficients of the bracket operator."""
        return self.weights * self.density_values

    def describe(self) -> str:
        return f"{self.kind} {self.family} level={self.level} Q={self.Q} p={self.p}"


def _density(points: np.ndarray) -> np.ndarray:
    return np.full(points.shape[0], 0.5 ** points.shape[1])


def _tensor_from_1d(rules: Sequence[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return pts, w


def _index_map(coarse: np.ndarray, fine: np.ndarray) -> np.ndarray:
    lookup = {tuple(row): k for k, row in enumerate(fine.tolist())}
    try:
        return np.array([lookup[tuple(row)] for row in coarse.tolist()], dtype=int)
    except KeyError:
        return np.zeros(0, dtype=int)


def tensor_quadrature(family: str, level_per_dim: Sequence[int] | int, p: int | None = None) -> QuadratureRule:
    """Product rule.

    For ``clenshaw_curtis`` the level selects ``2**level + 1`` points per
    dimension (level 0 is the midpoint rule); for the Gauss families the level
    is the point count itself.
    """
    if family not in _FAMILIES:
        raise ValueError(f"unknown quadrature family {family!r}")
    if isinstance(level_per_dim, (int, np.integer)):
        if p is None:
            raise ValueError("p is required when a single level is given")
        levels = (int(level_per_dim),) * p
    else:
        levels = tuple(int(v) for v in level_per_dim)
        if p is not None and len(levels) != p:
            raise ValueError(f"{len(levels)} levels given for p={p}")
    rules = [_FAMILIES[family](lv) for lv in levels]
    pts, w = _tensor_from_1d(rules)
    nesting = np.zeros(0, dtype=int)
    if family == "clenshaw_curtis" and all(lv >= 1 for lv in levels):
        coarse, _ = _tensor_from_1d([clenshaw_curtis_1d(lv - 1) for lv in levels])
        nesting = _index_map(coarse, pts)
    return QuadratureRule(family, pts, w, _density(pts), levels, nesting, kind="tensor")


def _smolyak_terms(level: int, p: int):
    for l in itertools.product(range(level + 1), repeat=p):
        s = sum(l)
        if level - p + 1 <= s <= level:
            coef = (-1) ** (level - s) * math.comb(p - 1, level - s)
            if coef != 0:
                yield l, coef


def sparse_quadrature(family: str, level: int, p: int) -> QuadratureRule:
    """Smolyak combination of nested Clenshaw-Curtis rules.

    ``level`` counts from 0 (a single point); a level-``k`` rule is exact for
    polynomials of total degree ``2k + 1``. For ``p = 3`` the node counts are
    1, 7, 25, 69, 177, 441, ... . Weights may be negative and are not clipped.
    """
    if family != "clenshaw_curtis":
        raise ValueError("sparse grids are built from nested clenshaw_curtis rules only")
    if level < 0 or p < 1:
        raise ValueError("need level >= 0 and p >= 1")
    acc: dict[tuple[float, ...], float] = {}
    for l, coef in _smolyak_terms(level, p):
        pts, w = _tensor_from_1d([clenshaw_curtis_1d(lv) for lv in l])
        for row, wk in zip(pts.tolist(), w):
            key = tuple(row)
            acc[key] = acc.get(key, 0.0) + coef * wk
    keys = sorted(acc)
    pts = np.array(keys, dtype=float).reshape(len(keys), p)
    w = np.array([acc[k] for k in keys])
    nesting = np.zeros(0, dtype=int)
    if level >= 1:
        coarse = sparse_quadrature(family, level - 1, p)
        nesting = _index_map(coarse.points, pts)
    return QuadratureRule(family, pts, w, _density(pts), level, nesting, kind="sparse")


def is_nested(coarse: QuadratureRule, fine: QuadratureRule) -> bool:
    """True when every point of ``coarse`` is (bit-exactly) a point of ``fine``."""
    return _index_map(coarse.points, fine.points).size == coarse.Q


def bracket(rule: QuadratureRule, h) -> np.ndarray:
    """Quadrature approximation of the expectation, ``sum_k w_k h(xi_k) f(xi_k)``.

    ``h`` is either a callable on the ``(Q, p)`` point array or an array of
    values whose leading axis runs over the quadrature points.
    """
    vals = h(rule.points) if callable(h) else h
    vals = np.asarray(vals, dtype=float)
    if vals.shape[0] != rule.Q:
        raise ValueError(f"h has {vals.shape[0]} values for {rule.Q} points")
    return np.tensordot(rule.wf, vals, axes=(0, 0))
