"""Smoothness indicator, per-cell level adaptation and moment statistics."""

from __future__ import annotations

import numpy as np

from ..random_space import BasisSet

__all__ = ["smoothness_indicator", "adapt_levels", "moments_to_quantities", "band_start"]


def band_start(basis: BasisSet, orders, level: int) -> int:
    """First moment index of the top degree band of ``level`` (levels from 1).

    At level 1 there is no coarser rung; the band is the single degree
    ``M_1``.
    """
    prev = orders[level - 2] if level >= 2 else orders[0] - 1
    return basis.count_up_to(prev)


def smoothness_indicator(u_hat: np.ndarray, start: int, stop: int | None = None) -> np.ndarray:
    """Share of the first component's energy in moments ``start:stop``.

    ``u_hat`` has shape ``(..., N, m)``; moments beyond ``stop`` are ignored.
    By orthonormality ``<(u_l - u_{l-1})^2> / <u_l^2>`` reduces to sums of
    squared moments. A zero field gives ``S = 0``.
    """
    u = np.asarray(u_hat, dtype=float)[..., :stop, 0]
    den = np.sum(u * u, axis=-1)
    num = np.sum(u[..., start:] ** 2, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        S = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    return S


def adapt_levels(S: np.ndarray, levels: np.ndarray, delta_dec: float, delta_inc: float, cap: int) -> np.ndarray:
    """Move each cell one level down if ``S < delta_dec``, up if ``S > delta_inc``.

    Levels are clipped to ``[1, cap]``; a cell already above ``cap`` is
    lowered to it.
    """
    S = np.asarray(S)
    levels = np.asarray(levels, dtype=int)
    new = levels.copy()
    new[S < delta_dec] -= 1
    new[S > delta_inc] += 1
    return np.clip(new, 1, cap)


def moments_to_quantities(u_hat: np.ndarray):
    """Expectation and variance per conserved variable from moments ``(..., N, m)``."""
    u = np.asarray(u_hat, dtype=float)
    return u[..., 0, :].copy(), np.sum(u[..., 1:, :] ** 2, axis=-2)
