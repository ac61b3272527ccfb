"""Deterministic conservation laws: fluxes, wave speeds, admissibility.

States carry the conserved variables on the last axis; any leading shape
(cells, quadrature points, ...) is allowed. Unit normals broadcast against
the state's leading shape with ``d`` entries on their last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError
from .random_space import BasisSet, build_total_degree_basis, eval_basis, gauss_legendre_1d

__all__ = [
    "ModelProblem",
    "BurgersModel",
    "EulerModel",
    "burgers_model",
    "euler_model",
    "GalerkinTensor",
    "galerkin_tensors",
    "burgers_sg_analytic_flux",
]


class ModelProblem:
    m: int
    d: int
    name: str = "model"

    def physical_flux(self, u, n):
        raise NotImplementedError

    def numerical_flux(self, ul, ur, n, dx_dt=None):
        raise NotImplementedError

    def max_wave_speed(self, u, n=None):
        raise NotImplementedError

    def admissible(self, u) -> np.ndarray:
        return np.all(np.isfinite(u), axis=-1)

    def reflect(self, u, n):
        """Mirror state across a wall with unit normal ``n``."""
        raise NotImplementedError

    def check_admissible(self, u, where: str = ""):
        ok = self.admissible(u)
        if not np.all(ok):
            bad = np.argwhere(~np.atleast_1d(ok))[0]
            raise AdmissibilityError(
                f"inadmissible {self.name} state at index {tuple(int(b) for b in bad)}{where}",
                cell=int(bad[0]) if bad.size else None,
                point=int(bad[1]) if bad.size > 1 else None,
            )


class BurgersModel(ModelProblem):
    """Inviscid Burgers equation ``u_t + (u^2/2)_x = 0``.

    The numerical flux is Lax-Friedrichs with dissipation ``dx/dt``; when no
    ratio is supplied it falls back to the local (Rusanov) wave speed.
    """

    m = 1
    d = 1
    name = "burgers"

    def physical_flux(self, u, n=1.0):
        u = np.asarray(u, dtype=float)
        return 0.5 * u * u * _normal_x(n, u)

    def numerical_flux(self, ul, ur, n=1.0, dx_dt=None):
        ul = np.asarray(ul, dtype=float)
        ur = np.asarray(ur, dtype=float)
        nx = _normal_x(n, ul)
        central = 0.25 * (ul * ul + ur * ur) * nx
        if dx_dt is None:
            a = np.maximum(np.abs(ul), np.abs(ur))
            return central - 0.5 * a * (ur - ul)
        return central - 0.5 * dx_dt * (ur - ul)

    def max_wave_speed(self, u, n=None):
        return np.abs(np.asarray(u, dtype=float)[..., 0])

    def reflect(self, u, n):
        return -np.asarray(u, dtype=float)


def _normal_x(n, u):
    n = np.asarray(n, dtype=float)
    if n.ndim == 0:
        return n
    return n[..., 0:1] if n.shape[-1] == 1 else n


def burgers_model() -> BurgersModel:
    return BurgersModel()


class EulerModel(ModelProblem):
    """Compressible Euler equations with ideal-gas pressure.

    Conserved variables ``(rho, rho v_1..rho v_d, rho e)`` and
    ``p = (gamma - 1) rho (e - |v|^2 / 2)``.
    """

    name = "euler"

    def __init__(self, gamma: float = 1.4, d: int = 2, flux: str = "rusanov"):
        if gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        if flux not in ("rusanov", "hll"):
            raise ValueError(f"unknown numerical flux {flux!r}")
        self.gamma = float(gamma)
        self.d = d
        self.m = d + 2
        self.flux_kind = flux

    # primitive helpers
    def pressure(self, u):
        u = np.asarray(u, dtype=float)
        rho = u[..., 0]
        mom = u[..., 1:-1]
        return (self.gamma - 1.0) * (u[..., -1] - 0.5 * np.sum(mom * mom, axis=-1) / rho)

    def sound_speed(self, u):
        u = np.asarray(u, dtype=float)
        return np.sqrt(self.gamma * self.pressure(u) / u[..., 0])

    def from_primitive(self, rho, vel, p):
        rho = np.asarray(rho, dtype=float)
        vel = np.asarray(vel, dtype=float)
        p = np.asarray(p, dtype=float)
        if vel.ndim == rho.ndim:
            vel = vel[..., None]
        out = np.empty(rho.shape + (self.m,))
        out[..., 0] = rho
        out[..., 1:-1] = rho[..., None] * vel
        out[..., -1] = p / (self.gamma - 1.0) + 0.5 * rho * np.sum(vel * vel, axis=-1)
        return out

    def to_primitive(self, u):
        u = np.asarray(u, dtype=float)
        rho = u[..., 0]
        return rho, u[..., 1:-1] / rho[..., None], self.pressure(u)

    def admissible(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            ok = (u[..., 0] > 0.0) & (self.pressure(u) > 0.0)
        return ok & np.all(np.isfinite(u), axis=-1)

    def _normal(self, n, u):
        n = np.asarray(n, dtype=float)
        if n.ndim == 0:
            n = n[None]
        return np.broadcast_to(n, u.shape[:-1] + (self.d,))

    def physical_flux(self, u, n):
        u = np.asarray(u, dtype=float)
        n = self._normal(n, u)
        rho = u[..., 0]
        mom = u[..., 1:-1]
        p = self.pressure(u)
        vn = np.sum(mom * n, axis=-1) / rho
        F = np.empty(u.shape)
        F[..., 0] = rho * vn
        F[..., 1:-1] = mom * vn[..., None] + p[..., None] * n
        F[..., -1] = (u[..., -1] + p) * vn
        return F

    def max_wave_speed(self, u, n=None):
        u = np.asarray(u, dtype=float)
        c = self.sound_speed(u)
        vel = u[..., 1:-1] / u[..., 0:1]
        if n is None:
            return np.sqrt(np.sum(vel * vel, axis=-1)) + c
        n = self._normal(n, u)
        return np.abs(np.sum(vel * n, axis=-1)) + c

    def _face_side(self, u, n, where: str):
        """Flux, normal velocity, sound speed and admissibility of one face side."""
        rho = u[..., 0]
        mom = u[..., 1:-1]
        with np.errstate(invalid="ignore", divide="ignore"):
            p = (self.gamma - 1.0) * (u[..., -1] - 0.5 * np.sum(mom * mom, axis=-1) / rho)
            ok = (rho > 0.0) & (p > 0.0) & np.all(np.isfinite(u), axis=-1)
            if not np.all(ok):
                self.check_admissible(u, where)
            vn = np.sum(mom * n, axis=-1) / rho
            c = np.sqrt(self.gamma * p / rho)
        F = np.empty(u.shape)
        F[..., 0] = rho * vn
        F[..., 1:-1] = mom * vn[..., None] + p[..., None] * n
        F[..., -1] = (u[..., -1] + p) * vn
        return F, vn, c

    def numerical_flux(self, ul, ur, n, dx_dt=None):
        ul = np.asarray(ul, dtype=float)
        ur = np.asarray(ur, dtype=float)
        nn = self._normal(n, ul)
        Fl, vl, cl = self._face_side(ul, nn, " (left flux state)")
        Fr, vr, cr = self._face_side(ur, nn, " (right flux state)")
        if self.flux_kind == "rusanov":
            a = np.maximum(np.abs(vl) + cl, np.abs(vr) + cr)
            return 0.5 * (Fl + Fr) - 0.5 * a[..., None] * (ur - ul)
        # HLL with Davis wave-speed estimates
        sl = np.minimum(vl - cl, vr - cr)[..., None]
        sr = np.maximum(vl + cl, vr + cr)[..., None]
        mid = (sr * Fl - sl * Fr + sl * sr * (ur - ul)) / (sr - sl)
        return np.where(sl >= 0.0, Fl, np.where(sr <= 0.0, Fr, mid))

    def reflect(self, u, n):
        u = np.asarray(u, dtype=float)
        n = self._normal(n, u)
        out = u.copy()
        mom = u[..., 1:-1]
        out[..., 1:-1] = mom - 2.0 * np.sum(mom * n, axis=-1)[..., None] * n
        return out


def euler_model(gamma: float = 1.4, d: int = 2, flux: str = "rusanov") -> EulerModel:
    return EulerModel(gamma, d, flux)


# ---------------------------------------------------------------------------
# analytic stochastic-Galerkin flux for Burgers


@dataclass(frozen=True, eq=False)
class GalerkinTensor:
    """Triple products ``C[i] = <phi phi^T phi_i>`` for a one-dimensional basis."""

    C: np.ndarray  # (N, N, N), C[i, j, k] = <phi_i phi_j phi_k>

    @property
    def N(self) -> int:
        return self.C.shape[0]

    def __getitem__(self, i):
        return self.C[i]


def galerkin_tensors(basis: BasisSet | int) -> GalerkinTensor:
    """Exact triple products via Gauss-Legendre quadrature of degree >= 3M."""
    if isinstance(basis, (int, np.integer)):
        basis = build_total_degree_basis(int(basis) - 1, 1)
    if basis.p != 1:
        raise ValueError("Galerkin tensors are provided for p = 1 only")
    nq = math.ceil((3 * basis.M + 1) / 2) + 1
    x, w = gauss_legendre_1d(nq)
    phi = eval_basis(basis, x[:, None])
    C = np.einsum("q,qi,qj,qk->ijk", 0.5 * w, phi, phi, phi)
    return GalerkinTensor(C)


def burgers_sg_analytic_flux(ul, ur, tensors: GalerkinTensor, dx_dt: float):
    """Lax-Friedrichs flux of the Burgers SG system written with triple products.

    ``G_i = (ul^T C_i ul + ur^T C_i ur) / 4 - dx_dt / 2 * (ur - ul)_i``.
    Moment vectors have shape ``(..., N)``.
    """
    ul = np.asarray(ul, dtype=float)
    ur = np.asarray(ur, dtype=float)
    C = tensors.C
    quad = np.einsum("...j,ijk,...k->...i", ul, C, ul) + np.einsum("...j,ijk,...k->...i", ur, C, ur)
    return 0.25 * quad - 0.5 * dx_dt * (ur - ul)
