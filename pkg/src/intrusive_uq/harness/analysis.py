"""Post-processing helpers for tube-like runs."""

from __future__ import annotations

import numpy as np

__all__ = ["front_position", "level_contrast"]


def front_position(centroids: np.ndarray, values: np.ndarray, axis: int = 1, n_bins: int = 100) -> float:
    """Coordinate of the steepest jump of a cell field along ``axis``.

    Cells are binned by their centroid coordinate, the field is averaged per
    bin and the front is the midpoint between the two neighboring bins with
    the largest difference. Empty bins are skipped.
    """
    y = np.asarray(centroids, dtype=float)[:, axis]
    v = np.asarray(values, dtype=float)
    edges = np.linspace(y.min(), y.max(), n_bins + 1)
    idx = np.clip(np.searchsorted(edges, y, side="right") - 1, 0, n_bins - 1)
    count = np.bincount(idx, minlength=n_bins)
    total = np.bincount(idx, weights=v, minlength=n_bins)
    keep = count > 0
    mid = 0.5 * (edges[:-1] + edges[1:])[keep]
    mean = total[keep] / count[keep]
    k = int(np.argmax(np.abs(np.diff(mean))))
    return 0.5 * (mid[k] + mid[k + 1])


def level_contrast(centroids: np.ndarray, levels: np.ndarray, front: float, width: float = 0.1, axis: int = 1):
    """Mean refinement level within ``width`` of ``front`` and over the whole domain."""
    y = np.asarray(centroids, dtype=float)[:, axis]
    near = np.abs(y - front) <= width
    lv = np.asarray(levels, dtype=float)
    return float(lv[near].mean()) if np.any(near) else float("nan"), float(lv.mean())
