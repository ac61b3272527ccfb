"""Default experiment configs, one per preset (used by ``--preset``)."""

from __future__ import annotations

import copy

import numpy as np

from ..errors import ConfigError
from .presets import preset_names


def _cc(level):
    return {"family": "clenshaw_curtis", "kind": "tensor", "level": level}


def _gl(n):
    return {"family": "gauss_legendre", "kind": "tensor", "level": n}


# NACA, one uncertainty: orders 2..9; 5 nodes for order 2, 9 for 3-6, 17 above
_NACA1D_LADDER = [{"order": k, "quadrature": _cc(2 if k == 2 else 3 if k <= 6 else 4)} for k in range(2, 10)]

# NACA, two uncertainties: tensor CC, 5^2 / 9^2 / 17^2 nodes
_UQ2_LADDER = [{"order": k, "quadrature": _cc([2, 2] if k == 1 else [3, 3] if k <= 4 else [4, 4])} for k in range(1, 10)]

_DEFAULTS = {
    "burgers_random_shock": {
        "method": "ipm",
        "basis": {"order": 5},
        "quadrature": _gl(9),
        "reference": {"points": 100, "order": 5},
    },
    "burgers_periodic": {"method": "sg", "basis": {"order": 5}, "quadrature": _gl(9)},
    "burgers_steady": {"method": "osipm", "basis": {"order": 2}, "quadrature": _gl(5)},
    "euler1d_steady_shock": {"method": "osipm", "basis": {"order": 2}, "quadrature": _gl(5)},
    "sod": {"method": "sc_blackbox", "basis": {"order": 0}, "quadrature": _gl(1)},
    "shocktube3d": {
        "method": "adaptive_ipm",
        "ladder": [{"order": 1, "quadrature": _cc([1, 1, 1])}, {"order": 2, "quadrature": _cc([2, 2, 2])}],
        "adaptivity": {"delta_dec": 4e-3, "delta_inc": 2e-2, "initial_level": 1},
        "reference": {"points": 8, "order": 2},
    },
    "naca1d": {
        "method": "readosipm",
        "ladder": _NACA1D_LADDER,
        "adaptivity": {"delta_dec": 2e-5, "delta_inc": 2e-4, "initial_level": 1},
        "retardation": {"orders": [2, 4, 5, 8], "thresholds": [6e-5, 3e-5, 2.2e-5, 2e-5]},
        "reference": {"points": 100, "order": 9},
    },
    "euler2d-uq2": {
        "method": "readosipm",
        "ladder": _UQ2_LADDER,
        "adaptivity": {"delta_dec": 1e-5, "delta_inc": 1e-4, "initial_level": 1},
        "retardation": {
            "orders": list(range(1, 9)),
            "thresholds": [float(v) for v in np.linspace(1.5e-5, 7e-6, 8)],
        },
        "reference": {"points": 20, "order": 9},
    },
}


def default_config(preset: str) -> dict:
    """Config mapping for ``preset``, ready for :func:`parse_config`."""
    if preset not in _DEFAULTS:
        raise ConfigError(f"no default config for {preset!r}; choose from {', '.join(preset_names())}", "--preset")
    body = copy.deepcopy(_DEFAULTS[preset])
    return {"name": preset, "problem": {"preset": preset}, "output": {"dir": f"runs/{preset}"}, **body}
