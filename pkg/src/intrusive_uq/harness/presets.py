"""Preset test cases.

Every uncertain parameter is uniform on ``[lo, hi]`` and driven by one
component of ``xi ~ U(-1, 1)^p`` through ``mid + half * xi``. Parameters are
passed as keyword arguments so that a config file can override any of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import ConfigError
from ..mesh import Mesh1D, naca0012_mesh, rectangle_mesh
from ..models import burgers_model, euler_model
from ..solver.problem import Problem

__all__ = ["Case", "PRESETS", "build_preset", "preset_names", "uniform"]


@dataclass(eq=False)
class Case:
    """A problem plus the defaults a run of it needs."""

    name: str
    problem: Problem
    closure: str
    steady: bool
    solver: dict = field(default_factory=dict)
    region: object = None
    reference_points: int = 100
    params: dict = field(default_factory=dict)


def uniform(bounds, xi: np.ndarray) -> np.ndarray:
    lo, hi = (float(b) for b in bounds)
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi


# ---------------------------------------------------------------------------
# Burgers


def burgers_random_shock(
    n_cells: int = 100,
    x_shock=(0.45, 0.55),
    u_left: float = 1.0,
    u_right: float = 0.0,
    smoothing: float = 0.0,
    t_end: float = 0.2,
    domain=(0.0, 1.0),
    boundary: str = "outflow",
) -> Case:
    """Riemann problem whose jump sits at an uncertain position.

    ``smoothing > 0`` replaces the jump by ``tanh`` of that width; the
    compressive ramp steepens into a shock at the same uncertain position.
    """

    def ic(x, xi):
        x0 = uniform(x_shock, xi[:, 0])
        s = x[:, 0][:, None] - x0[None, :]
        if smoothing > 0.0:
            h = 0.5 * (1.0 - np.tanh(s / smoothing))
        else:
            h = (s < 0.0).astype(float)
        return (u_right + (u_left - u_right) * h)[..., None]

    mesh = Mesh1D(domain[0], domain[1], n_cells, boundary)
    return Case(
        "burgers_random_shock",
        Problem(burgers_model(), mesh, ic, 1, name="burgers_random_shock"),
        "quadratic",
        False,
        {"t_end": t_end},
    )


def burgers_periodic(n_cells: int = 100, mean: float = 0.5, amplitude=(0.2, 0.4), n_steps: int = 500) -> Case:
    """Sine wave with uncertain amplitude on a periodic interval."""

    def ic(x, xi):
        a = uniform(amplitude, xi[:, 0])
        return (mean + a[None, :] * np.sin(2.0 * np.pi * x[:, 0])[:, None])[..., None]

    mesh = Mesh1D(0.0, 1.0, n_cells, "periodic")
    return Case(
        "burgers_periodic",
        Problem(burgers_model(), mesh, ic, 1, name="burgers_periodic"),
        "quadratic",
        False,
        {"n_steps": n_steps},
    )


def burgers_steady(n_cells: int = 10, u_in=(0.9, 1.1)) -> Case:
    """Standing shock between inflow ``u_in`` and outflow ``-u_in`` (Dirichlet ends).

    The initial linear profile relaxes to a steady layer whose shape depends
    on ``xi``.
    """

    def ic(x, xi):
        a = uniform(u_in, xi[:, 0])
        return (a[None, :] * (1.0 - 2.0 * x[:, 0])[:, None])[..., None]

    mesh = Mesh1D(0.0, 1.0, n_cells, "dirichlet")
    return Case(
        "burgers_steady",
        Problem(burgers_model(), mesh, ic, 1, name="burgers_steady"),
        "quadratic",
        True,
        {"eps": 1e-8, "tau": 1e-12},
    )


# ---------------------------------------------------------------------------
# one-dimensional Euler


def euler1d_steady_shock(n_cells: int = 10, mach=(1.8, 2.2), x_shock: float = 0.5, gamma: float = 1.4) -> Case:
    """Normal shock with uncertain upstream Mach number.

    Upstream ``rho = p = 1``; the downstream state follows the
    Rankine-Hugoniot relations, and both ends hold Dirichlet data.
    """
    model = euler_model(gamma, 1)

    def sides(xi):
        M = uniform(mach, xi)
        u1 = M * np.sqrt(gamma)
        r2 = (gamma + 1.0) * M**2 / ((gamma - 1.0) * M**2 + 2.0)
        p2 = (2.0 * gamma * M**2 - (gamma - 1.0)) / (gamma + 1.0)
        one = np.ones_like(M)
        return model.from_primitive(one, u1, one), model.from_primitive(r2, u1 / r2, p2)

    def ic(x, xi):
        left, right = sides(xi[:, 0])
        return np.where((x[:, 0] < x_shock)[:, None, None], left[None], right[None])

    mesh = Mesh1D(0.0, 1.0, n_cells, "dirichlet")
    return Case(
        "euler1d_steady_shock",
        Problem(model, mesh, ic, 1, name="euler1d_steady_shock"),
        "euler_entropy",
        True,
        {"eps": 1e-8, "tau": 1e-10},
    )


def sod(n_cells: int = 400, flux: str = "rusanov", t_end: float = 0.2, gamma: float = 1.4) -> Case:
    """Deterministic Sod tube on [0, 1] (the random variable is unused)."""
    model = euler_model(gamma, 1, flux)
    left = model.from_primitive(1.0, 0.0, 1.0)
    right = model.from_primitive(0.125, 0.0, 0.1)

    def ic(x, xi):
        s = np.where((x[:, 0] < 0.5)[:, None], left[None], right[None])
        return np.repeat(s[:, None, :], xi.shape[0], axis=1)

    mesh = Mesh1D(0.0, 1.0, n_cells, "outflow")
    return Case("sod", Problem(model, mesh, ic, 1, name="sod"), "euler_entropy", False, {"t_end": t_end}, reference_points=1)


# ---------------------------------------------------------------------------
# two-dimensional Euler


def shocktube3d(
    nx: int = 8,
    ny: int = 112,
    width: float = 0.25,
    y_range=(-0.5, 3.0),
    rho_upper: float = 1.289,
    energy_upper: float = 1.0,
    rho_lower=(1.189, 1.389),
    energy_lower=(0.2, 0.4),
    y_shock=(1.0, 1.2),
    gamma: float = 1.4,
    t_end: float = 2.0,
) -> Case:
    """Straight tube with a density and energy jump, gas at rest, three uncertainties.

    Side walls are slip walls; both tube ends hold the deterministic initial
    states (the lower state at its mean values).
    """
    model = euler_model(gamma, 2)
    tags = dict(left="wall", right="wall", bottom="ends", top="ends")
    mesh = rectangle_mesh(0.0, width, y_range[0], y_range[1], nx, ny, tags=tags)

    def state(x, rho_l, e_l, ys):
        up = x[:, 1][:, None] > ys[None, :]
        out = np.zeros((x.shape[0], rho_l.shape[0], 4))
        out[..., 0] = np.where(up, rho_upper, rho_l[None, :])
        out[..., 3] = np.where(up, energy_upper, e_l[None, :])
        return out

    def ic(x, xi):
        return state(x, uniform(rho_lower, xi[:, 0]), uniform(energy_lower, xi[:, 1]), uniform(y_shock, xi[:, 2]))

    def farfield(x, xi):
        z = np.zeros(xi.shape[0])
        return state(x, uniform(rho_lower, z), uniform(energy_lower, z), uniform(y_shock, z))

    problem = Problem(model, mesh, ic, 3, {"wall": "slip_wall", "ends": "dirichlet_farfield"}, farfield, "shocktube3d")
    return Case("shocktube3d", problem, "euler_entropy", False, {"t_end": t_end}, reference_points=8)


def _airfoil_case(name, p, mach_of, pressure_of, angle_of, mesh_params, gamma, region):
    """Far-field flow around NACA0012, scaled by the mean far-field pressure and density."""
    model = euler_model(gamma, 2)
    mesh = naca0012_mesh(**mesh_params)

    def ic(x, xi):
        pr = pressure_of(xi)
        rho = pr  # fixed temperature: density scales with pressure
        speed = mach_of(xi) * np.sqrt(gamma * pr / rho)
        phi = np.deg2rad(angle_of(xi))
        vel = np.stack([speed * np.cos(phi), speed * np.sin(phi)], axis=-1)
        s = model.from_primitive(rho, vel, pr)
        return np.repeat(s[None], x.shape[0], axis=0)

    problem = Problem(model, mesh, ic, p, {"airfoil": "slip_wall", "farfield": "dirichlet_farfield"}, ic, name)
    return Case(name, problem, "euler_entropy", True, {"eps": 6e-6, "residual_mode": "zeroth_only"}, region)


_NACA_BOX = (-0.05, 1.05, -0.5, 0.5)


def naca1d(
    angle_deg=(0.75, 1.75),
    mach: float = 0.8,
    pressure: float = 101325.0,
    n_surface: int = 64,
    radius: float = 10.0,
    n_layers: int = 18,
    growth: float = 1.25,
    gamma: float = 1.4,
    region=_NACA_BOX,
) -> Case:
    """Transonic flow with an uncertain angle of attack (degrees).

    Temperature is fixed at 273.15 K; states are scaled so that the far-field
    density and pressure are one.
    """
    mesh_params = dict(n_surface=n_surface, radius=radius, n_layers=n_layers, growth=growth)
    return _airfoil_case(
        "naca1d",
        1,
        lambda xi: np.full(xi.shape[0], float(mach)),
        lambda xi: np.ones(xi.shape[0]),
        lambda xi: uniform(angle_deg, xi[:, 0]),
        mesh_params,
        gamma,
        None if region is None else tuple(region),
    )


def euler2d_uq2(
    pressure=(100325.0, 102325.0),
    mach=(0.775, 0.825),
    angle_deg: float = 1.25,
    pressure_ref: float = 101325.0,
    n_surface: int = 64,
    radius: float = 10.0,
    n_layers: int = 18,
    growth: float = 1.25,
    gamma: float = 1.4,
    region=_NACA_BOX,
) -> Case:
    """Airfoil flow with uncertain far-field pressure (Pa) and Mach number."""
    mesh_params = dict(n_surface=n_surface, radius=radius, n_layers=n_layers, growth=growth)
    case = _airfoil_case(
        "euler2d-uq2",
        2,
        lambda xi: uniform(mach, xi[:, 1]),
        lambda xi: uniform(pressure, xi[:, 0]) / pressure_ref,
        lambda xi: np.full(xi.shape[0], float(angle_deg)),
        mesh_params,
        gamma,
        None if region is None else tuple(region),
    )
    case.reference_points = 20
    return case


PRESETS: dict[str, Callable[..., Case]] = {
    "burgers_random_shock": burgers_random_shock,
    "burgers_periodic": burgers_periodic,
    "burgers_steady": burgers_steady,
    "euler1d_steady_shock": euler1d_steady_shock,
    "sod": sod,
    "shocktube3d": shocktube3d,
    "naca1d": naca1d,
    "euler2d-uq2": euler2d_uq2,
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def build_preset(name: str, **params) -> Case:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}", "problem.preset") from None
    try:
        case = builder(**params)
    except TypeError as err:
        raise ConfigError(str(err), "problem.params") from None
    case.params = dict(params)
    return case
