"""Self-describing ASCII moment snapshots.

A snapshot starts with ``# key: value`` header lines (method, p, m, d, cell
count, moment count, maximal basis order, mesh hash and the column layout),
followed by one row per cell::

    order volume centroid[d] E[m] Var[m] u[N_max * m]

Moments are stored in the top-level layout, row-major over ``(N, m)``;
cells at lower orders carry zeros beyond their own moment count. Values are
written with 17 significant digits so a round trip is bit-exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import IncompatibleSnapshotError
from ..mesh import mesh_hash, region_mask

__all__ = ["Snapshot", "write_snapshot", "read_snapshot", "compare_snapshots", "relative_error"]

MAGIC = "# moment snapshot"


@dataclass(eq=False)
class Snapshot:
    method: str
    p: int
    mesh_hash: str
    orders: np.ndarray  # (n,)
    volumes: np.ndarray  # (n,)
    centroids: np.ndarray  # (n, d)
    E: np.ndarray  # (n, m)
    Var: np.ndarray  # (n, m)
    moments: np.ndarray  # (n, N, m)

    @property
    def n_cells(self) -> int:
        return self.orders.shape[0]

    @property
    def m(self) -> int:
        return self.E.shape[1]

    @property
    def max_order(self) -> int:
        return int(self.orders.max()) if self.orders.size else 0

    def truncated(self, order: int) -> "Snapshot":
        """Leading moments up to total degree ``order``; E and Var are kept as stored."""
        N = math.comb(order + self.p, self.p)
        return Snapshot(
            self.method,
            self.p,
            self.mesh_hash,
            np.minimum(self.orders, order),
            self.volumes,
            self.centroids,
            self.E,
            self.Var,
            self.moments[:, :N].copy(),
        )


def write_snapshot(path, snap: Snapshot) -> None:
    n, N, m = snap.moments.shape
    d = snap.centroids.shape[1]
    cols = ["order", "volume"] + [f"x{k}" for k in range(d)]
    cols += [f"E{k}" for k in range(m)] + [f"Var{k}" for k in range(m)]
    cols += [f"u{i}_{k}" for i in range(N) for k in range(m)]
    header = [
        MAGIC,
        "# version: 1",
        f"# method: {snap.method}",
        f"# p: {snap.p}",
        f"# m: {m}",
        f"# d: {d}",
        f"# n_cells: {n}",
        f"# n_moments: {N}",
        f"# max_order: {snap.max_order}",
        f"# mesh_hash: {snap.mesh_hash}",
        f"# columns: {' '.join(cols)}",
    ]
    data = np.column_stack(
        [snap.volumes, snap.centroids, snap.E, snap.Var, snap.moments.reshape(n, N * m)]
    )
    lines = []
    for order, row in zip(snap.orders, data):
        lines.append(f"{int(order)} " + " ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(header + lines) + "\n")


def _header(lines) -> dict:
    meta = {}
    for line in lines:
        if not line.startswith("#"):
            break
        if ":" in line:
            key, value = line[1:].split(":", 1)
            meta[key.strip()] = value.strip()
    return meta


def read_snapshot(path, mesh=None, order: int | None = None, truncate: bool = False) -> Snapshot:
    """Load a snapshot and validate it against ``mesh`` and a requested basis ``order``.

    A snapshot of higher order than ``order`` is rejected unless ``truncate``
    is set, in which case its leading moments are kept. A lower-order
    snapshot is always rejected.
    """
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != MAGIC:
        raise IncompatibleSnapshotError(f"{path}: not a moment snapshot")
    meta = _header(text)
    try:
        p, m, d = int(meta["p"]), int(meta["m"]), int(meta["d"])
        n, N = int(meta["n_cells"]), int(meta["n_moments"])
    except (KeyError, ValueError) as err:
        raise IncompatibleSnapshotError(f"{path}: malformed header ({err})") from None
    rows = [ln for ln in text if ln and not ln.startswith("#")]
    if len(rows) != n:
        raise IncompatibleSnapshotError(f"{path}: header announces {n} cells, found {len(rows)} rows")
    table = np.array([[float(v) for v in ln.split()] for ln in rows]).reshape(n, -1)
    width = 2 + d + 2 * m + N * m
    if table.shape[1] != width:
        raise IncompatibleSnapshotError(f"{path}: expected {width} columns, found {table.shape[1]}")
    c = 2 + d
    snap = Snapshot(
        meta.get("method", "unknown"),
        p,
        meta.get("mesh_hash", ""),
        table[:, 0].astype(int),
        table[:, 1],
        table[:, 2:c],
        table[:, c : c + m],
        table[:, c + m : c + 2 * m],
        table[:, c + 2 * m :].reshape(n, N, m),
    )
    if mesh is not None and snap.mesh_hash != mesh_hash(mesh):
        raise IncompatibleSnapshotError(f"{path}: mesh hash {snap.mesh_hash} does not match the active mesh")
    if order is not None:
        if snap.max_order < order:
            raise IncompatibleSnapshotError(f"{path}: snapshot order {snap.max_order} is below the requested {order}")
        if snap.max_order > order:
            if not truncate:
                raise IncompatibleSnapshotError(
                    f"{path}: snapshot order {snap.max_order} exceeds {order}; pass truncate to keep leading moments"
                )
            snap = snap.truncated(order)
    return snap


def relative_error(values: np.ndarray, reference: np.ndarray, volumes: np.ndarray, mask=None) -> float:
    """Relative discrete L2 error; zero when both fields vanish, inf when only the reference does."""
    if mask is None:
        mask = np.ones(volumes.shape[0], dtype=bool)
    w = volumes[mask]
    num = math.sqrt(float(np.sum(w * (values[mask] - reference[mask]) ** 2)))
    den = math.sqrt(float(np.sum(w * reference[mask] ** 2)))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


class _CellCloud:
    """Minimal mesh stand-in so :func:`region_mask` can work from stored centroids."""

    def __init__(self, centroids):
        self.centroids = centroids


def compare_snapshots(result: Snapshot, reference: Snapshot, region=None) -> list[dict]:
    """Relative L2 errors of E and Var per conserved variable."""
    if result.mesh_hash != reference.mesh_hash:
        raise IncompatibleSnapshotError("snapshots were computed on different meshes")
    if result.m != reference.m:
        raise IncompatibleSnapshotError("snapshots differ in the number of conserved variables")
    mask = region_mask(_CellCloud(reference.centroids), region)
    rows = []
    for k in range(result.m):
        rows.append(
            {
                "component": k,
                "rel_E_error": relative_error(result.E[:, k], reference.E[:, k], reference.volumes, mask),
                "rel_Var_error": relative_error(result.Var[:, k], reference.Var[:, k], reference.volumes, mask),
            }
        )
    return rows
