"""Exact self-similar Riemann solutions used as deterministic test oracles."""

from __future__ import annotations

import numpy as np

from .errors import UnsupportedStateError

__all__ = ["exact_riemann_burgers", "exact_riemann_euler_1d", "euler_star_state"]


def exact_riemann_burgers(ul: float, ur: float, s) -> np.ndarray:
    """Entropy solution of Burgers' equation at similarity coordinates ``s = x/t``."""
    s = np.asarray(s, dtype=float)
    if ul > ur:
        speed = 0.5 * (ul + ur)
        return np.where(s < speed, ul, ur)
    return np.clip(s, ul, ur)


def _pressure_function(p, rho, p0, c, gamma):
    if p > p0:
        A = 2.0 / ((gamma + 1.0) * rho)
        B = (gamma - 1.0) / (gamma + 1.0) * p0
        sq = np.sqrt(A / (p + B))
        return (p - p0) * sq, sq * (1.0 - 0.5 * (p - p0) / (B + p))
    r = p / p0
    f = 2.0 * c / (gamma - 1.0) * (r ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    df = 1.0 / (rho * c) * r ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def euler_star_state(left, right, gamma: float = 1.4, tol: float = 1e-14, max_iter: int = 100):
    """Pressure and velocity between the nonlinear waves (Newton on the pressure function).

    ``left`` and ``right`` are primitive triples ``(rho, u, p)``.
    """
    rl, ul, pl = map(float, left)
    rr, ur, pr = map(float, right)
    if min(rl, rr, pl, pr) <= 0.0:
        raise UnsupportedStateError("Riemann data must have positive density and pressure")
    cl = np.sqrt(gamma * pl / rl)
    cr = np.sqrt(gamma * pr / rr)
    if 2.0 / (gamma - 1.0) * (cl + cr) <= ur - ul:
        raise UnsupportedStateError("Riemann data generates vacuum")
    # two-rarefaction guess
    z = (gamma - 1.0) / (2.0 * gamma)
    p = ((cl + cr - 0.5 * (gamma - 1.0) * (ur - ul)) / (cl / pl**z + cr / pr**z)) ** (1.0 / z)
    p = max(p, 1e-12 * min(pl, pr))
    for _ in range(max_iter):
        fl, dfl = _pressure_function(p, rl, pl, cl, gamma)
        fr, dfr = _pressure_function(p, rr, pr, cr, gamma)
        p_new = p - (fl + fr + ur - ul) / (dfl + dfr)
        p_new = max(p_new, 1e-3 * p)
        if abs(p_new - p) <= tol * 0.5 * (p_new + p):
            p = p_new
            break
        p = p_new
    fl, _ = _pressure_function(p, rl, pl, cl, gamma)
    fr, _ = _pressure_function(p, rr, pr, cr, gamma)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    return p, u


def exact_riemann_euler_1d(left, right, s, gamma: float = 1.4):
    """Primitive solution ``(rho, u, p)`` of the 1D Euler Riemann problem at ``s = x/t``.

    Standard three-wave construction (shock or rarefaction on either side of a
    contact). Raises :class:`UnsupportedStateError` when vacuum would form.
    """
    with np.errstate(invalid="ignore"):
        return _sample(left, right, np.asarray(s, dtype=float), gamma)


def _sample(left, right, s, gamma):
    rl, ul, pl = map(float, left)
    rr, ur, pr = map(float, right)
    ps, us = euler_star_state(left, right, gamma)
    g = gamma
    gm = (g - 1.0) / (g + 1.0)
    cl = np.sqrt(g * pl / rl)
    cr = np.sqrt(g * pr / rr)
    rho = np.empty_like(s)
    u = np.empty_like(s)
    p = np.empty_like(s)

    left_side = s <= us
    # left of contact
    if ps > pl:
        rsl = rl * (ps / pl + gm) / (gm * ps / pl + 1.0)
        sl = ul - cl * np.sqrt((g + 1.0) / (2 * g) * ps / pl + (g - 1.0) / (2 * g))
        pre = s < sl
        rho = np.where(left_side & pre, rl, np.where(left_side, rsl, rho))
        u = np.where(left_side & pre, ul, np.where(left_side, us, u))
        p = np.where(left_side & pre, pl, np.where(left_side, ps, p))
    else:
        rsl = rl * (ps / pl) ** (1.0 / g)
        csl = cl * (ps / pl) ** ((g - 1.0) / (2 * g))
        head = ul - cl
        tail = us - csl
        fan_u = 2.0 / (g + 1.0) * (cl + 0.5 * (g - 1.0) * ul + s)
        fan_c = 2.0 / (g + 1.0) * (cl + 0.5 * (g - 1.0) * (ul - s))
        fan_rho = rl * (fan_c / cl) ** (2.0 / (g - 1.0))
        fan_p = pl * (fan_c / cl) ** (2.0 * g / (g - 1.0))
        zone_pre = s < head
        zone_fan = (s >= head) & (s < tail)
        rho = np.where(left_side, np.where(zone_pre, rl, np.where(zone_fan, fan_rho, rsl)), rho)
        u = np.where(left_side, np.where(zone_pre, ul, np.where(zone_fan, fan_u, us)), u)
        p = np.where(left_side, np.where(zone_pre, pl, np.where(zone_fan, fan_p, ps)), p)

    right_side = ~left_side
    if ps > pr:
        rsr = rr * (ps / pr + gm) / (gm * ps / pr + 1.0)
        sr = ur + cr * np.sqrt((g + 1.0) / (2 * g) * ps / pr + (g - 1.0) / (2 * g))
        post = s > sr
        rho = np.where(right_side, np.where(post, rr, rsr), rho)
        u = np.where(right_side, np.where(post, ur, us), u)
        p = np.where(right_side, np.where(post, pr, ps), p)
    else:
        rsr = rr * (ps / pr) ** (1.0 / g)
        csr = cr * (ps / pr) ** ((g - 1.0) / (2 * g))
        head = ur + cr
        tail = us + csr
        fan_u = 2.0 / (g + 1.0) * (-cr + 0.5 * (g - 1.0) * ur + s)
        fan_c = 2.0 / (g + 1.0) * (cr - 0.5 * (g - 1.0) * (ur - s))
        fan_rho = rr * (np.abs(fan_c) / cr) ** (2.0 / (g - 1.0))
        fan_p = pr * (np.abs(fan_c) / cr) ** (2.0 * g / (g - 1.0))
        zone_post = s > head
        zone_fan = (s <= head) & (s > tail)
        rho = np.where(right_side, np.where(zone_post, rr, np.where(zone_fan, fan_rho, rsr)), rho)
        u = np.where(right_side, np.where(zone_post, ur, np.where(zone_fan, fan_u, us)), u)
        p = np.where(right_side, np.where(zone_post, pr, np.where(zone_fan, fan_p, ps)), p)
    return rho, u, p
