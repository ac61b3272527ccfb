"""Finite-volume geometry and the pointwise deterministic update.

A :class:`FVGrid` flattens either mesh type into cells, faces and ghost
slots. Face endpoints index an extended array: interior cells occupy
``0..n-1`` and ghost slots follow. A :class:`StencilPlan` restricts the
update to a set of target cells so that cells at different refinement
levels can be advanced with different quadrature rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from ..errors import AdmissibilityError
from ..mesh import DIRICHLET, OUTFLOW, PERIODIC, SLIP, BoundarySpec, Mesh1D, Mesh2D, boundary_kind

__all__ = ["FVGrid", "build_grid", "StencilPlan", "cell_average", "GAUSS3"]

# 3-point Gauss rule on [-1/2, 1/2] for cell averages
GAUSS3 = (np.array([-0.5 * np.sqrt(0.6), 0.0, 0.5 * np.sqrt(0.6)]), np.array([5.0, 8.0, 5.0]) / 18.0)


@dataclass(eq=False)
class FVGrid:
    n_cells: int
    d: int
    volumes: np.ndarray
    h: np.ndarray
    centroids: np.ndarray
    face_left: np.ndarray
    face_right: np.ndarray
    face_normal: np.ndarray
    face_length: np.ndarray
    ghost_kind: list[str]
    ghost_source: np.ndarray
    ghost_normal: np.ndarray
    ghost_position: np.ndarray
    dx: float | None = None
    ghost_width: np.ndarray | None = None
    dirichlet: np.ndarray = field(init=False)

    def __post_init__(self):
        self.dirichlet = np.array([k == DIRICHLET for k in self.ghost_kind], dtype=bool)

    @property
    def n_ghosts(self) -> int:
        return len(self.ghost_kind)


def build_grid(mesh, boundary: BoundarySpec | dict | None = None) -> FVGrid:
    if isinstance(mesh, Mesh1D):
        return _grid_1d(mesh)
    if isinstance(mesh, Mesh2D):
        if not isinstance(boundary, BoundarySpec):
            boundary = BoundarySpec(dict(boundary or {}))
        return _grid_2d(mesh, boundary)
    raise TypeError(f"unsupported mesh type {type(mesh).__name__}")


def _grid_1d(mesh: Mesh1D) -> FVGrid:
    n = mesh.n_cells
    dx = mesh.dx
    kl, kr = mesh.boundary_kinds
    if kl == PERIODIC:
        left = np.arange(n)
        right = (np.arange(n) + 1) % n
        kinds, src, gn, gpos = [], np.zeros(0, int), np.zeros((0, 1)), np.zeros((0, 1))
    else:
        # face k sits at x_min + k dx; ghost n is left of cell 0, ghost n+1 right of cell n-1
        left = np.concatenate([[n], np.arange(n)])
        right = np.concatenate([np.arange(n), [n + 1]])
        kinds = [kl, kr]
        src = np.array([0, n - 1])
        gn = np.array([[-1.0], [1.0]])
        gpos = np.array([[mesh.x_min - 0.5 * dx], [mesh.x_max + 0.5 * dx]])
    F = left.shape[0]
    return FVGrid(
        n_cells=n,
        d=1,
        volumes=mesh.volumes,
        h=np.full(n, dx),
        centroids=mesh.centroids,
        face_left=left,
        face_right=right,
        face_normal=np.ones((F, 1)),
        face_length=np.ones(F),
        ghost_kind=kinds,
        ghost_source=src,
        ghost_normal=gn,
        ghost_position=gpos,
        dx=dx,
        ghost_width=np.full(len(kinds), dx),
    )


def _grid_2d(mesh: Mesh2D, boundary: BoundarySpec) -> FVGrid:
    n = mesh.n_cells
    left = mesh.edge_cells[:, 0].copy()
    right = mesh.edge_cells[:, 1].copy()
    bnd = np.flatnonzero(right < 0)
    right[bnd] = n + np.arange(bnd.size)
    kinds = []
    for e in bnd:
        k = boundary.kind(mesh.edge_tags[e])
        if k == PERIODIC:
            raise ValueError("periodic boundaries are only supported in 1D")
        kinds.append(k)
    mid = 0.5 * (mesh.vertices[mesh.edges[bnd, 0]] + mesh.vertices[mesh.edges[bnd, 1]])
    return FVGrid(
        n_cells=n,
        d=2,
        volumes=mesh.areas,
        h=mesh.areas / mesh.perimeters,
        centroids=mesh.centroids,
        face_left=left,
        face_right=right,
        face_normal=mesh.normals,
        face_length=mesh.lengths,
        ghost_kind=kinds,
        ghost_source=mesh.edge_cells[bnd, 0].copy(),
        ghost_normal=mesh.normals[bnd].copy(),
        ghost_position=mid,
    )


def cell_average(fn: Callable, centers: np.ndarray, widths: np.ndarray | None, xi: np.ndarray) -> np.ndarray:
    """Spatial cell average of ``fn(x, xi)``: 3-point Gauss in 1D, point value otherwise.

    ``fn`` maps ``(n, d)`` positions and ``(Q, p)`` points to ``(n, Q, m)``.
    """
    if widths is None or centers.shape[1] != 1:
        return _as_state(fn(centers, xi), centers.shape[0], xi.shape[0])
    nodes, weights = GAUSS3
    out = 0.0
    for s, w in zip(nodes, weights):
        out = out + w * _as_state(fn(centers + s * widths[:, None], xi), centers.shape[0], xi.shape[0])
    return out


def _as_state(values, n, Q):
    v = np.asarray(values, dtype=float)
    if v.shape == (n, Q):
        v = v[..., None]
    if v.ndim != 3 or v.shape[:2] != (n, Q):
        raise ValueError(f"state function returned shape {v.shape}, expected ({n}, {Q}, m)")
    return v


class StencilPlan:
    """Faces and neighbor cells needed to advance a set of target cells.

    Local state arrays list the needed interior cells first (``interior``),
    then the needed ghost slots (``ghosts``).
    """

    def __init__(self, grid: FVGrid, targets: np.ndarray):
        n = grid.n_cells
        targets = np.asarray(targets, dtype=int)
        self.targets = targets
        is_t = np.zeros(n + grid.n_ghosts, dtype=bool)
        is_t[targets] = True
        faces = np.flatnonzero(is_t[grid.face_left] | is_t[grid.face_right])
        ext = np.unique(np.concatenate([targets, grid.face_left[faces], grid.face_right[faces]]))
        self.interior = ext[ext < n]
        self.ghosts = ext[ext >= n] - n
        order = np.concatenate([self.interior, self.ghosts + n])
        loc = np.full(n + grid.n_ghosts, -1)
        loc[order] = np.arange(order.size)
        self.fl = loc[grid.face_left[faces]]
        self.fr = loc[grid.face_right[faces]]
        self.normals = grid.face_normal[faces][:, None, :]
        self.lengths = grid.face_length[faces]
        self.tloc = loc[targets]
        self.inv_vol = 1.0 / grid.volumes[targets]
        tpos = np.full(n + grid.n_ghosts, -1)
        tpos[targets] = np.arange(targets.size)
        rows, cols, vals = [], [], []
        for k, (a, b) in enumerate(zip(grid.face_left[faces], grid.face_right[faces])):
            if tpos[a] >= 0:
                rows.append(tpos[a]); cols.append(k); vals.append(self.lengths[k])
            if tpos[b] >= 0:
                rows.append(tpos[b]); cols.append(k); vals.append(-self.lengths[k])
        self.div = sp.csr_matrix((vals, (rows, cols)), shape=(targets.size, faces.size))
        self.ghost_src = loc[grid.ghost_source[self.ghosts]]
        self.ghost_kinds = [grid.ghost_kind[g] for g in self.ghosts]
        self.ghost_normals = grid.ghost_normal[self.ghosts]
        self.dirichlet = self.ghosts[grid.dirichlet[self.ghosts]]
        self._dir_slots = np.flatnonzero(grid.dirichlet[self.ghosts])
        self._copy_slots = np.array([k for k, kind in enumerate(self.ghost_kinds) if kind == OUTFLOW], dtype=int)
        self._slip_slots = np.array([k for k, kind in enumerate(self.ghost_kinds) if kind == SLIP], dtype=int)

    @property
    def n_local(self) -> int:
        return self.interior.size + self.ghosts.size

    def assemble(self, U_interior: np.ndarray, model, U_dirichlet: np.ndarray | None) -> np.ndarray:
        """Append ghost states to interior states of shape ``(n_int, q, m)``.

        ``U_dirichlet`` holds states for ``self.dirichlet`` in that order.
        """
        ni = self.interior.size
        q, m = U_interior.shape[1:]
        U = np.empty((self.n_local, q, m))
        U[:ni] = U_interior
        if self._copy_slots.size:
            U[ni + self._copy_slots] = U_interior[self.ghost_src[self._copy_slots]]
        if self._slip_slots.size:
            slots = self._slip_slots
            U[ni + slots] = model.reflect(U_interior[self.ghost_src[slots]], self.ghost_normals[slots][:, None, :])
        if self._dir_slots.size:
            U[ni + self._dir_slots] = U_dirichlet
        return U

    def update(self, model, U: np.ndarray, dt, dx_dt=None) -> np.ndarray:
        """Explicit first-order FV step for the target cells at every point.

        ``dt`` (and ``dx_dt``) may be scalars or hold one value per point.
        """
        dt = np.asarray(dt, dtype=float)
        if dx_dt is not None and np.ndim(dx_dt) == 1:
            dx_dt = np.asarray(dx_dt)[:, None]
        G = model.numerical_flux(U[self.fl], U[self.fr], self.normals, dx_dt)
        f, q, m = G.shape
        div = (self.div @ G.reshape(f, q * m)).reshape(-1, q, m)
        if dt.ndim == 0:
            return U[self.tloc] - (dt * self.inv_vol)[:, None, None] * div
        return U[self.tloc] - self.inv_vol[:, None, None] * dt[None, :, None] * div


def check_states(model, U: np.ndarray, cells: np.ndarray, point_offset: int = 0, step: int | None = None):
    """Raise :class:`AdmissibilityError` naming the first bad (cell, point)."""
    ok = model.admissible(U)
    if np.all(ok):
        return
    c, k = np.argwhere(~ok)[0]
    cell = int(cells[c]) if c < cells.size else None
    raise AdmissibilityError(
        f"inadmissible {model.name} state in cell {cell} at quadrature point {int(k) + point_offset}"
        + ("" if step is None else f" (step {step})"),
        cell=cell,
        point=int(k) + point_offset,
        step=step,
    )
