"""Spatial meshes: uniform 1D grids and unstructured triangle meshes.

Triangle meshes are read from and written to a small ASCII format modelled
on SU2's native format::

    NDIME= 2
    NPOIN= 4
    0.0 0.0
    ...
    NELEM= 2
    0 1 2
    ...
    NMARK= 1
    MARKER_TAG= farfield
    MARKER_ELEMS= 4
    0 1
    ...

Vertex indices are 0-based. Every boundary edge must belong to exactly one
marker. Triangles given clockwise are reordered to counter-clockwise.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import MeshError

__all__ = [
    "Mesh1D",
    "Mesh2D",
    "BoundarySpec",
    "load_mesh",
    "write_mesh",
    "rectangle_mesh",
    "naca0012_mesh",
    "ghost_state",
    "discrete_l2",
    "relative_l2_error",
    "region_mask",
    "mesh_hash",
]

SLIP = "slip_wall"
DIRICHLET = "dirichlet_farfield"
OUTFLOW = "outflow"
PERIODIC = "periodic"

_KIND_ALIASES = {
    "slip": SLIP,
    "wall": SLIP,
    "slip_wall": SLIP,
    "euler_wall": SLIP,
    "dirichlet": DIRICHLET,
    "farfield": DIRICHLET,
    "dirichlet_farfield": DIRICHLET,
    "outflow": OUTFLOW,
    "copy": OUTFLOW,
    "periodic": PERIODIC,
}


def boundary_kind(name: str) -> str:
    try:
        return _KIND_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown boundary kind {name!r}") from None


@dataclass(frozen=True)
class Mesh1D:
    """Uniform grid with ``n_cells`` interior cells and one ghost per side.

    ``boundary`` is a kind for both ends or a ``(left, right)`` pair.
    """

    x_min: float
    x_max: float
    n_cells: int
    boundary: str | tuple[str, str] = OUTFLOW

    d = 1

    def __post_init__(self):
        if self.n_cells < 1 or not self.x_max > self.x_min:
            raise MeshError("need n_cells >= 1 and x_max > x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(1, self.n_cells + 1) - 0.5) * self.dx

    @property
    def centroids(self) -> np.ndarray:
        return self.centers[:, None]

    @property
    def volumes(self) -> np.ndarray:
        return np.full(self.n_cells, self.dx)

    @property
    def boundary_kinds(self) -> tuple[str, str]:
        b = self.boundary
        pair = (b, b) if isinstance(b, str) else tuple(b)
        kinds = tuple(boundary_kind(k) for k in pair)
        if (PERIODIC in kinds) and kinds[0] != kinds[1]:
            raise MeshError("periodic boundaries must be set on both ends")
        return kinds


@dataclass
class BoundarySpec:
    """Map from marker tag to boundary kind (slip wall or Dirichlet far field)."""

    kinds: dict[str, str] = field(default_factory=dict)

    def kind(self, tag: str) -> str:
        if tag in self.kinds:
            return boundary_kind(self.kinds[tag])
        return boundary_kind(tag)


@dataclass(eq=False)
class Mesh2D:
    """Triangle mesh with precomputed edge geometry.

    Edge ``e`` joins vertices ``edges[e]``; ``edge_cells[e] = (left, right)``
    with ``right == -1`` on the boundary; ``normals[e]`` is the unit normal
    pointing out of the left cell.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    markers: dict[str, np.ndarray]
    edges: np.ndarray = field(init=False)
    edge_cells: np.ndarray = field(init=False)
    normals: np.ndarray = field(init=False)
    lengths: np.ndarray = field(init=False)
    edge_tags: list = field(init=False)
    areas: np.ndarray = field(init=False)
    centroids: np.ndarray = field(init=False)

    d = 2

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=int)
        self.markers = {k: np.asarray(v, dtype=int).reshape(-1, 2) for k, v in self.markers.items()}
        self._build()

    @classmethod
    def from_arrays(cls, vertices, triangles, markers, element_lines=None, marker_lines=None) -> "Mesh2D":
        obj = cls.__new__(cls)
        obj.vertices = np.ascontiguousarray(vertices, dtype=float)
        obj.triangles = np.ascontiguousarray(triangles, dtype=int)
        obj.markers = {k: np.asarray(v, dtype=int).reshape(-1, 2) for k, v in markers.items()}
        obj._build(element_lines, marker_lines)
        return obj

    @property
    def n_cells(self) -> int:
        return self.triangles.shape[0]

    @property
    def volumes(self) -> np.ndarray:
        return self.areas

    @property
    def perimeters(self) -> np.ndarray:
        out = np.zeros(self.n_cells)
        np.add.at(out, self.edge_cells[:, 0], self.lengths)
        inner = self.edge_cells[:, 1] >= 0
        np.add.at(out, self.edge_cells[inner, 1], self.lengths[inner])
        return out

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_cells[:, 1] < 0)

    def _build(self, element_lines=None, marker_lines=None):
        V = self.vertices
        T = self.triangles
        nv = V.shape[0]
        if V.ndim != 2 or V.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        if T.ndim != 2 or T.shape[1] != 3:
            raise MeshError("triangles must be an (n, 3) array")
        for t, tri in enumerate(T):
            if np.any(tri < 0) or np.any(tri >= nv):
                raise MeshError(f"triangle {t} references a missing vertex", _line(element_lines, t))
        a, b, c = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
        signed = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
        scale = np.max(np.ptp(V, axis=0)) ** 2 if nv else 1.0
        for t in np.flatnonzero(np.abs(signed) <= 1e-14 * scale):
            raise MeshError(f"triangle {t} has zero area", _line(element_lines, t))
        cw = signed < 0
        if np.any(cw):
            T = T.copy()
            T[cw] = T[cw][:, [0, 2, 1]]
            self.triangles = T
        self.areas = np.abs(signed)
        self.centroids = (V[T[:, 0]] + V[T[:, 1]] + V[T[:, 2]]) / 3.0

        edge_index: dict[tuple[int, int], int] = {}
        edges, owners, normals, lengths = [], [], [], []
        for t, tri in enumerate(T):
            for k in range(3):
                p, q = int(tri[k]), int(tri[(k + 1) % 3])
                key = (p, q) if p < q else (q, p)
                e = edge_index.get(key)
                if e is None:
                    edge_index[key] = len(edges)
                    edges.append(key)
                    owners.append([t, -1])
                    dvec = V[q] - V[p]
                    ln = float(np.hypot(dvec[0], dvec[1]))
                    normals.append([dvec[1] / ln, -dvec[0] / ln])
                    lengths.append(ln)
                elif owners[e][1] == -1:
                    owners[e][1] = t
                else:
                    raise MeshError(f"edge {key} is shared by more than two triangles", _line(element_lines, t))
        self.edges = np.array(edges, dtype=int).reshape(-1, 2)
        self.edge_cells = np.array(owners, dtype=int).reshape(-1, 2)
        self.normals = np.array(normals, dtype=float).reshape(-1, 2)
        self.lengths = np.array(lengths, dtype=float)

        tags: list = [None] * len(edges)
        for name, pairs in self.markers.items():
            for r, (p, q) in enumerate(pairs):
                key = (int(p), int(q)) if p < q else (int(q), int(p))
                e = edge_index.get(key)
                line = None if marker_lines is None else marker_lines.get(name, [None] * len(pairs))[r]
                if e is None:
                    raise MeshError(f"marker {name!r} lists edge {key} which is not a mesh edge", line)
                if self.edge_cells[e, 1] >= 0:
                    raise MeshError(f"marker {name!r} lists interior edge {key}", line)
                if tags[e] is not None and tags[e] != name:
                    raise MeshError(f"edge {key} carries markers {tags[e]!r} and {name!r}", line)
                tags[e] = name
        for e in np.flatnonzero(self.edge_cells[:, 1] < 0):
            if tags[e] is None:
                raise MeshError(f"boundary edge {tuple(self.edges[e])} is not covered by any marker")
        self.edge_tags = tags


def _line(lines, k):
    return None if lines is None else lines[k]


def load_mesh(path) -> Mesh2D:
    """Read a triangle mesh in the ASCII format described in the module docstring."""
    text = Path(path).read_text().splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(text):
            raw = text[pos].split("%")[0].strip()
            pos += 1
            if raw:
                return raw, pos
        raise MeshError("unexpected end of file", pos)

    def keyword(expected):
        raw, ln = next_line()
        if "=" not in raw:
            raise MeshError(f"expected '{expected}=', got {raw!r}", ln)
        key, val = (s.strip() for s in raw.split("=", 1))
        if key.upper() != expected:
            raise MeshError(f"expected '{expected}=', got {key!r}", ln)
        return val, ln

    def count(expected):
        val, ln = keyword(expected)
        try:
            n = int(val)
        except ValueError:
            raise MeshError(f"{expected} must be an integer, got {val!r}", ln) from None
        if n < 0:
            raise MeshError(f"{expected} must be non-negative", ln)
        return n

    def numbers(n, kind, what):
        raw, ln = next_line()
        parts = raw.split()
        if len(parts) < n:
            raise MeshError(f"{what}: expected {n} values, got {len(parts)}", ln)
        try:
            return [kind(v) for v in parts[:n]], ln
        except ValueError:
            raise MeshError(f"{what}: could not parse {raw!r}", ln) from None

    raw, ln = next_line()
    if raw.replace(" ", "").upper() != "NDIME=2":
        raise MeshError(f"expected 'NDIME= 2', got {raw!r}", ln)
    npoin = count("NPOIN")
    verts = [numbers(2, float, "vertex")[0] for _ in range(npoin)]
    nelem = count("NELEM")
    tris, elines = [], []
    for _ in range(nelem):
        vals, ln = numbers(3, int, "triangle")
        tris.append(vals)
        elines.append(ln)
    nmark = count("NMARK")
    markers: dict[str, list] = {}
    mlines: dict[str, list] = {}
    for _ in range(nmark):
        tag, _ln = keyword("MARKER_TAG")
        ne = count("MARKER_ELEMS")
        pairs, lines = [], []
        for _ in range(ne):
            vals, ln = numbers(2, int, "marker edge")
            pairs.append(vals)
            lines.append(ln)
        markers[tag] = pairs
        mlines[tag] = lines
    return Mesh2D.from_arrays(
        np.array(verts, dtype=float).reshape(-1, 2),
        np.array(tris, dtype=int).reshape(-1, 3),
        markers,
        element_lines=elines,
        marker_lines=mlines,
    )


def write_mesh(mesh: Mesh2D, path) -> None:
    lines = ["NDIME= 2", f"NPOIN= {mesh.vertices.shape[0]}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"NELEM= {mesh.n_cells}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"NMARK= {len(mesh.markers)}")
    for tag, pairs in mesh.markers.items():
        lines.append(f"MARKER_TAG= {tag}")
        lines.append(f"MARKER_ELEMS= {len(pairs)}")
        lines += [f"{p} {q}" for p, q in pairs.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def rectangle_mesh(
    x0: float,
    x1: float,
    y0: float,
    y1: float,
    nx: int,
    ny: int,
    tags: dict[str, str] | None = None,
    pattern: str = "alternating",
) -> Mesh2D:
    """Structured rectangle with each quad split into two triangles.

    ``tags`` names the markers of the ``left/right/bottom/top`` sides; sides
    sharing a name are merged into one marker.
    """
    names = {"left": "left", "right": "right", "bottom": "bottom", "top": "top"}
    names.update(tags or {})
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if pattern == "alternating" and (i + j) % 2:
                tris += [[a, b, d], [b, c, d]]
            else:
                tris += [[a, b, c], [a, c, d]]
    sides = {
        "bottom": [(vid(i, 0), vid(i + 1, 0)) for i in range(nx)],
        "top": [(vid(i, ny), vid(i + 1, ny)) for i in range(nx)],
        "left": [(vid(0, j), vid(0, j + 1)) for j in range(ny)],
        "right": [(vid(nx, j), vid(nx, j + 1)) for j in range(ny)],
    }
    markers: dict[str, list] = {}
    for side, pairs in sides.items():
        markers.setdefault(names[side], []).extend(pairs)
    return Mesh2D(verts, np.array(tris), markers)


def points_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd ray-casting test of each point against a closed polygon."""
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    x0, y0 = polygon[:, 0], polygon[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return np.count_nonzero(straddle & (x < xcross), axis=1) % 2 == 1


def naca0012_surface(n: int) -> np.ndarray:
    """Closed NACA0012 contour (unit chord, cosine spacing, counter-clockwise from the trailing edge)."""
    beta = np.linspace(0.0, np.pi, n // 2 + 1)
    x = 0.5 * (1.0 - np.cos(beta))
    t = 0.12
    yt = 5 * t * (0.2969 * np.sqrt(x) - 0.1260 * x - 0.3516 * x**2 + 0.2843 * x**3 - 0.1036 * x**4)
    yt[-1] = 0.0  # closed trailing edge
    upper = np.column_stack([x[::-1], yt[::-1]])
    lower = np.column_stack([x[1:-1], -yt[1:-1]])
    return np.vstack([upper, lower])


def naca0012_mesh(n_surface: int = 64, radius: float = 10.0, n_layers: int = 18, growth: float = 1.25) -> Mesh2D:
    """Desk-scale triangulated far field around a NACA0012 airfoil.

    Points are laid out in layers that morph from the airfoil contour to a
    circle of ``radius`` around mid-chord; the point cloud is Delaunay
    triangulated and triangles inside the airfoil removed. Markers:
    ``airfoil`` (wall) and ``farfield``.
    """
    from scipy.spatial import Delaunay

    surf = naca0012_surface(n_surface)
    center = np.array([0.5, 0.0])
    ang = np.arctan2(surf[:, 1] - center[1], surf[:, 0] - center[0])
    circle = center + radius * np.column_stack([np.cos(ang), np.sin(ang)])
    first = 1.5 / n_surface
    steps = first * growth ** np.arange(n_layers)
    dist = np.cumsum(steps)
    dist = dist / dist[-1]
    pts = [surf]
    for k, s in enumerate(dist):
        layer = (1.0 - s) * surf + s * circle
        # coarsen outer layers by dropping every other point
        stride = 1 if s < 0.05 else (2 if s < 0.3 else 4)
        pts.append(layer[::stride])
    allp = np.vstack(pts)
    allp = np.unique(np.round(allp, 12), axis=0)
    # keep exact surface points first for marker bookkeeping
    surf_keys = {tuple(np.round(p, 12)) for p in surf}
    rest = np.array([p for p in allp if tuple(p) not in surf_keys])
    verts = np.vstack([np.round(surf, 12), rest])
    tri = Delaunay(verts)
    simplices = tri.simplices
    cent = verts[simplices].mean(axis=1)
    inside = points_in_polygon(cent, np.round(surf, 12))
    simplices = simplices[~inside]
    ns = surf.shape[0]
    wall = [(k, (k + 1) % ns) for k in range(ns)]
    # far-field markers: boundary edges not on the wall
    counts: dict[tuple[int, int], int] = {}
    for t in simplices:
        for k in range(3):
            p, q = int(t[k]), int(t[(k + 1) % 3])
            key = (min(p, q), max(p, q))
            counts[key] = counts.get(key, 0) + 1
    wall_keys = {(min(p, q), max(p, q)) for p, q in wall}
    far = [key for key, c in counts.items() if c == 1 and key not in wall_keys]
    missing = [k for k in wall_keys if counts.get(k, 0) != 1]
    if missing:
        raise MeshError(f"triangulation does not conform to the airfoil ({len(missing)} wall edges missing)")
    return Mesh2D(verts, simplices, {"airfoil": wall, "farfield": far})


def mesh_hash(mesh) -> str:
    h = hashlib.sha256()
    if isinstance(mesh, Mesh1D):
        h.update(repr((mesh.x_min, mesh.x_max, mesh.n_cells)).encode())
    else:
        h.update(np.ascontiguousarray(mesh.vertices).tobytes())
        h.update(np.ascontiguousarray(mesh.triangles).tobytes())
    return h.hexdigest()[:16]


def ghost_state(u_interior, kind: str, n, farfield=None, model=None):
    """Boundary ghost state for a single face.

    ``slip_wall`` mirrors the velocity, ``v - 2 (v.n) n``, and copies density
    and energy; ``dirichlet_farfield`` returns ``farfield`` unchanged;
    ``outflow`` copies the interior state.
    """
    kind = boundary_kind(kind)
    u = np.asarray(u_interior, dtype=float)
    if kind == DIRICHLET:
        if farfield is None:
            raise ValueError("Dirichlet boundary needs a far-field state")
        return np.broadcast_to(np.asarray(farfield, dtype=float), u.shape).copy()
    if kind == OUTFLOW:
        return u.copy()
    if kind == SLIP:
        if model is not None:
            return model.reflect(u, n)
        n = np.asarray(n, dtype=float)
        out = u.copy()
        mom = u[..., 1:-1]
        out[..., 1:-1] = mom - 2.0 * np.sum(mom * n, axis=-1)[..., None] * n
        return out
    raise ValueError(f"no ghost state for boundary kind {kind!r}")


def region_mask(mesh, region) -> np.ndarray:
    """Boolean cell mask from ``None`` (all cells), a box or a predicate on centroids.

    A box is ``(xmin, xmax)`` in 1D and ``(xmin, xmax, ymin, ymax)`` in 2D.
    """
    cent = mesh.centroids
    if region is None:
        return np.ones(cent.shape[0], dtype=bool)
    if callable(region):
        return np.asarray(region(cent), dtype=bool)
    box = np.asarray(region, dtype=float).reshape(-1, 2)
    mask = np.ones(cent.shape[0], dtype=bool)
    for k, (lo, hi) in enumerate(box):
        mask &= (cent[:, k] >= lo) & (cent[:, k] <= hi)
    return mask


def discrete_l2(values, mesh, region=None) -> float:
    """``sqrt(sum_j vol_j e_j^2)`` over cells whose centroid lies in ``region``."""
    values = np.asarray(values, dtype=float)
    mask = region_mask(mesh, region)
    if not np.any(mask):
        raise ValueError("error region contains no cells")
    vol = mesh.volumes[mask]
    v = values[mask].reshape(vol.shape[0], -1)
    return float(np.sqrt(np.sum(vol[:, None] * v * v)))


def relative_l2_error(approx, reference, mesh, region=None) -> float:
    ref = discrete_l2(reference, mesh, region)
    if ref == 0.0:
        raise ZeroDivisionError("reference field has zero norm")
    return discrete_l2(np.asarray(approx) - np.asarray(reference), mesh, region) / ref
