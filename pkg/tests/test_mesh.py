import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from intrusive_uq.errors import MeshError
from intrusive_uq.mesh import (
    Mesh1D,
    Mesh2D,
    discrete_l2,
    ghost_state,
    load_mesh,
    naca0012_mesh,
    rectangle_mesh,
    region_mask,
    relative_l2_error,
    write_mesh,
)

TWO_TRIANGLES = """NDIME= 2
NPOIN= 4
0 0
1 0
1 1
0 1
NELEM= 2
0 1 2
0 2 3
NMARK= 1
MARKER_TAG= farfield
MARKER_ELEMS= 4
0 1
1 2
2 3
3 0
"""


def cell_normal_sums(mesh: Mesh2D) -> np.ndarray:
    out = np.zeros((mesh.n_cells, 2))
    ln = mesh.lengths[:, None] * mesh.normals
    np.add.at(out, mesh.edge_cells[:, 0], ln)
    inner = mesh.edge_cells[:, 1] >= 0
    np.add.at(out, mesh.edge_cells[inner, 1], -ln[inner])
    return out


@given(st.floats(-5, 5), st.floats(0.1, 10), st.integers(1, 300))
def test_1d_geometry(x0, length, n):
    mesh = Mesh1D(x0, x0 + length, n)
    assert mesh.dx == pytest.approx(length / n)
    j = np.arange(1, n + 1)
    np.testing.assert_allclose(mesh.centers, x0 + (j - 0.5) * mesh.dx)


def test_1d_rejects_mixed_periodic():
    with pytest.raises(MeshError):
        Mesh1D(0, 1, 4, boundary=("periodic", "outflow")).boundary_kinds


def test_unit_square_two_triangles(tmp_path):
    path = tmp_path / "square.su2"
    path.write_text(TWO_TRIANGLES)
    mesh = load_mesh(path)
    assert mesh.n_cells == 2
    assert mesh.edges.shape[0] == 5
    np.testing.assert_allclose(mesh.areas, [0.5, 0.5])
    assert np.abs(cell_normal_sums(mesh)).max() < 1e-14


def test_reference_triangle_normals_close():
    mesh = Mesh2D(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]), {"wall": [[0, 1], [1, 2], [2, 0]]})
    assert np.abs(cell_normal_sums(mesh)).max() < 1e-15


def test_structured_split_square_edge_count():
    mesh = rectangle_mesh(0, 1, 0, 1, 4, 2)
    assert mesh.n_cells == 16
    boundary = mesh.boundary_edges.size
    interior = mesh.edges.shape[0] - boundary
    assert boundary == 12
    assert interior == (16 * 3 - boundary) // 2
    # every interior edge has two distinct owners
    inner = mesh.edge_cells[mesh.edge_cells[:, 1] >= 0]
    assert np.all(inner[:, 0] != inner[:, 1])


@given(st.integers(1, 12), st.integers(1, 12), st.sampled_from(["alternating", "uniform"]))
def test_rectangle_invariants(nx, ny, pattern):
    mesh = rectangle_mesh(-1, 2, 0, 0.5, nx, ny, pattern=pattern)
    assert np.all(mesh.areas > 0)
    assert mesh.areas.sum() == pytest.approx(1.5)
    assert np.abs(cell_normal_sums(mesh)).max() < 1e-12


def test_naca_mesh_invariants():
    mesh = naca0012_mesh(n_surface=32, n_layers=10)
    assert np.all(mesh.areas > 0)
    scale = mesh.lengths.max()
    assert np.abs(cell_normal_sums(mesh)).max() < 1e-12 * scale
    assert set(mesh.markers) == {"airfoil", "farfield"}


def test_write_read_round_trip(tmp_path):
    mesh = naca0012_mesh(n_surface=32, n_layers=8)
    path = tmp_path / "naca.su2"
    write_mesh(mesh, path)
    back = load_mesh(path)
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.triangles, mesh.triangles)
    np.testing.assert_array_equal(back.edges, mesh.edges)
    np.testing.assert_array_equal(back.edge_cells, mesh.edge_cells)
    for tag in mesh.markers:
        np.testing.assert_array_equal(back.markers[tag], mesh.markers[tag])


def test_clockwise_triangles_are_reoriented():
    mesh = Mesh2D(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 2, 1]]), {"wall": [[0, 1], [1, 2], [2, 0]]})
    assert mesh.areas[0] == pytest.approx(0.5)


@pytest.mark.parametrize(
    "text,line",
    [
        (TWO_TRIANGLES.replace("0 2 3", "0 2 7"), 9),
        (TWO_TRIANGLES.replace("NELEM= 2", "NELEM= two"), 7),
        (TWO_TRIANGLES.replace("2 3\n3 0", "2 3\n2 0"), 16),
        (TWO_TRIANGLES.replace("1 0\n1 1", "1 0\n1 x"), 5),
    ],
    ids=["missing-vertex", "bad-count", "interior-marker", "bad-number"],
)
def test_malformed_files_report_line(tmp_path, text, line):
    path = tmp_path / "bad.su2"
    path.write_text(text)
    with pytest.raises(MeshError) as info:
        load_mesh(path)
    assert info.value.line == line


def test_uncovered_boundary_edge(tmp_path):
    path = tmp_path / "bad.su2"
    path.write_text(TWO_TRIANGLES.replace("MARKER_ELEMS= 4", "MARKER_ELEMS= 3").replace("2 3\n3 0\n", "2 3\n"))
    with pytest.raises(MeshError, match="not covered"):
        load_mesh(path)


def test_degenerate_triangle():
    with pytest.raises(MeshError, match="zero area"):
        Mesh2D(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), np.array([[0, 1, 2]]), {})


# -- boundary states -----------------------------------------------------------


def test_slip_ghost_parallel_and_tangential():
    n = np.array([0.0, 1.0])
    u = np.array([1.0, 0.0, 2.0, 5.0])
    np.testing.assert_array_equal(ghost_state(u, "slip_wall", n), [1.0, 0.0, -2.0, 5.0])
    u = np.array([1.0, 3.0, 0.0, 5.0])
    np.testing.assert_array_equal(ghost_state(u, "slip_wall", n), u)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 2 * np.pi))
def test_slip_ghost_cancels_normal_velocity(vx, vy, ang):
    n = np.array([np.cos(ang), np.sin(ang)])
    u = np.array([1.3, 1.3 * vx, 1.3 * vy, 40.0])
    g = ghost_state(u, "slip_wall", n)
    assert abs((g[1:3] + u[1:3]) @ n) < 1e-12


def test_dirichlet_and_outflow_ghosts():
    far = np.array([1.0, 0.5, 0.0, 2.0])
    u = np.array([2.0, 0.0, 0.0, 3.0])
    np.testing.assert_array_equal(ghost_state(u, "dirichlet_farfield", None, farfield=far), far)
    np.testing.assert_array_equal(ghost_state(u, "outflow", None), u)
    with pytest.raises(ValueError):
        ghost_state(u, "dirichlet_farfield", None)


# -- norms and regions ---------------------------------------------------------


def test_constant_field_norm():
    mesh = rectangle_mesh(0, 2, 0, 1.5, 5, 3)
    assert discrete_l2(np.full(mesh.n_cells, 3.0), mesh) == pytest.approx(3.0 * np.sqrt(3.0))


def test_empty_region_is_an_error():
    mesh = rectangle_mesh(0, 1, 0, 1, 3, 3)
    with pytest.raises(ValueError):
        discrete_l2(np.ones(mesh.n_cells), mesh, (5, 6, 5, 6))


def test_naca_box_reduces_cells():
    mesh = naca0012_mesh(n_surface=32, n_layers=10)
    mask = region_mask(mesh, (-0.05, 1.05, -0.5, 0.5))
    assert 0 < mask.sum() < mesh.n_cells


def test_relative_error_1d():
    mesh = Mesh1D(0, 1, 10)
    ref = np.ones(10)
    assert relative_l2_error(ref * 1.1, ref, mesh) == pytest.approx(0.1)
    assert relative_l2_error(ref, ref, mesh, (0.0, 0.5)) == 0.0
