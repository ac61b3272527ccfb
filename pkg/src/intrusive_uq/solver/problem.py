"""Problem definition and initial-moment projection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..closure import Projector
from ..mesh import Mesh1D, Mesh2D
from ..models import ModelProblem
from ..random_space import BasisSet, QuadratureRule
from .discretization import cell_average

__all__ = ["Problem", "project_initial"]

StateFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class Problem:
    """A conservation law on a mesh with an uncertain initial condition.

    ``initial_condition(x, xi)`` maps ``(n, d)`` positions and ``(Q, p)``
    random points to states of shape ``(n, Q, m)``. Dirichlet ghosts use
    ``farfield`` (same signature) when given, otherwise the initial condition.
    ``boundary`` maps 2D marker tags to boundary kinds.
    """

    model: ModelProblem
    mesh: Mesh1D | Mesh2D
    initial_condition: StateFn
    p: int
    boundary: dict[str, str] = field(default_factory=dict)
    farfield: StateFn | None = None
    name: str = "problem"


def _widths(mesh):
    return np.full(mesh.n_cells, mesh.dx) if isinstance(mesh, Mesh1D) else None


def project_initial(ic: StateFn, mesh, basis: BasisSet, rule: QuadratureRule) -> np.ndarray:
    """Cell averages of ``<u_IC phi>`` under ``rule``, shape ``(n_cells, N, m)``.

    1D cells are averaged with a 3-point Gauss rule, 2D cells use the centroid.
    """
    vals = cell_average(ic, mesh.centroids, _widths(mesh), rule.points)
    return Projector.build(basis, rule).project(vals)
