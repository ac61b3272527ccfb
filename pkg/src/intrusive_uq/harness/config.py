"""Experiment configuration files.

A config is a YAML mapping::

    name: burgers-ipm
    method: ipm                  # sg ipm osipm adaptive_ipm readosipm sc_blackbox sc_coupled
    problem:
      preset: burgers_random_shock
      params: {n_cells: 100}     # keyword overrides of the preset
      mesh: null                 # optional mesh file replacing a 2D preset mesh
    closure: null                # quadratic | euler_entropy; default from the preset
    basis: {order: 5}
    quadrature: {family: gauss_legendre, kind: tensor, level: 9}
    ladder:                      # adaptive methods only
      - {order: 1, quadrature: {family: clenshaw_curtis, level: 1}}
      - {order: 2, quadrature: {family: clenshaw_curtis, level: 2}}
    adaptivity: {delta_dec: 1.0e-5, delta_inc: 1.0e-4, initial_level: 1}
    retardation: {orders: [1], thresholds: [1.0e-4]}
    solver: {cfl: 0.5, t_end: 0.2, workers: 1}
    reference: {points: 100, family: gauss_legendre, order: 5}
    output: {dir: runs/burgers-ipm}
    region: null                 # error box, e.g. [-0.05, 1.05, -0.5, 0.5]

Errors name the offending field as a dotted path.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..errors import ConfigError
from ..random_space import QuadratureRule, sparse_quadrature, tensor_quadrature
from ..solver.config import SolverConfig

__all__ = ["METHODS", "QuadratureSpec", "RungSpec", "ExperimentConfig", "load_config", "parse_config"]

METHODS = ("sg", "ipm", "osipm", "adaptive_ipm", "readosipm", "sc_blackbox", "sc_coupled")
ADAPTIVE = ("adaptive_ipm", "readosipm")
COLLOCATION = ("sc_blackbox", "sc_coupled")
CLOSURES = ("quadratic", "euler_entropy")
FAMILIES = ("gauss_legendre", "gauss_lobatto", "clenshaw_curtis")
_SOLVER_FIELDS = {f.name: f for f in fields(SolverConfig)}


# ---------------------------------------------------------------------------
# field coercion


def _mapping(value, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"expected a mapping, got {type(value).__name__}", path)
    return value


def _check_keys(section: dict, allowed, path: str):
    for key in section:
        if key not in allowed:
            where = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"unknown field (allowed: {', '.join(sorted(allowed))})", where)


def _number(value, path: str) -> float:
    # YAML 1.1 reads "1e-5" as a string
    if isinstance(value, bool):
        raise ConfigError("expected a number, got a boolean", path)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}", path) from None


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not float(_number(value, path)).is_integer():
        raise ConfigError(f"expected an integer, got {value!r}", path)
    return int(float(value))


def _choice(value, options, path: str) -> str:
    if value not in options:
        raise ConfigError(f"expected one of {', '.join(options)}, got {value!r}", path)
    return value


# ---------------------------------------------------------------------------
# sections


@dataclass
class QuadratureSpec:
    """Quadrature rule description; ``level`` is a count for Gauss rules, a CC level otherwise."""

    family: str = "gauss_legendre"
    kind: str = "tensor"
    level: int | list[int] = 5

    @classmethod
    def parse(cls, data, path: str) -> "QuadratureSpec":
        data = _mapping(data, path)
        _check_keys(data, {"family", "kind", "level"}, path)
        family = _choice(data.get("family", "gauss_legendre"), FAMILIES, f"{path}.family")
        kind = _choice(data.get("kind", "tensor"), ("tensor", "sparse"), f"{path}.kind")
        if "level" not in data:
            raise ConfigError("missing field", f"{path}.level")
        raw = data["level"]
        if isinstance(raw, list):
            level = [_integer(v, f"{path}.level[{k}]") for k, v in enumerate(raw)]
            if kind == "sparse":
                raise ConfigError("sparse grids take a single level", f"{path}.level")
        else:
            level = _integer(raw, f"{path}.level")
        if kind == "sparse" and family != "clenshaw_curtis":
            raise ConfigError("sparse grids are built from clenshaw_curtis rules", f"{path}.family")
        return cls(family, kind, level)

    def build(self, p: int) -> QuadratureRule:
        if self.kind == "sparse":
            return sparse_quadrature(self.family, int(self.level), p)
        if isinstance(self.level, list):
            return tensor_quadrature(self.family, self.level, p)
        return tensor_quadrature(self.family, int(self.level), p)


@dataclass
class RungSpec:
    order: int
    quadrature: QuadratureSpec


@dataclass
class ExperimentConfig:
    """Validated experiment description; see the module docstring for the file layout."""

    method: str
    preset: str
    name: str = "experiment"
    params: dict = field(default_factory=dict)
    mesh: str | None = None
    closure: str | None = None
    order: int | None = None
    quadrature: QuadratureSpec | None = None
    ladder: list[RungSpec] = field(default_factory=list)
    delta_dec: float = 1e-5
    delta_inc: float = 1e-4
    initial_level: int = 1
    retardation_orders: list[int] = field(default_factory=list)
    retardation_thresholds: list[float] = field(default_factory=list)
    solver: dict = field(default_factory=dict)
    reference_points: int | None = None
    reference_family: str = "gauss_legendre"
    reference_order: int | None = None
    output: str = "runs"
    region: list[float] | None = None

    def __post_init__(self):
        self.validate()

    # -- validation ---------------------------------------------------------
    def validate(self):
        m = _choice(self.method, METHODS, "method")
        if m in ADAPTIVE:
            if not self.ladder:
                raise ConfigError(f"method {m} needs a refinement ladder", "ladder")
            if self.order is not None or self.quadrature is not None:
                raise ConfigError("adaptive methods take their orders and rules from the ladder", "basis")
            orders = [r.order for r in self.ladder]
            if any(b <= a for a, b in zip(orders, orders[1:])):
                raise ConfigError("ladder orders must increase", "ladder")
            if not 1 <= self.initial_level <= len(self.ladder):
                raise ConfigError("initial level outside the ladder", "adaptivity.initial_level")
            if self.delta_dec > self.delta_inc:
                raise ConfigError("delta_dec must not exceed delta_inc", "adaptivity.delta_dec")
        else:
            if self.ladder:
                raise ConfigError(f"method {m} does not use a refinement ladder", "ladder")
            if self.quadrature is None:
                raise ConfigError(f"method {m} needs a quadrature rule", "quadrature")
            if m not in COLLOCATION and self.order is None:
                raise ConfigError(f"method {m} needs a basis order", "basis.order")
        if self.retardation_orders or self.retardation_thresholds:
            if m not in ADAPTIVE:
                raise ConfigError("refinement retardation needs an adaptive method", "retardation")
            if len(self.retardation_orders) != len(self.retardation_thresholds):
                raise ConfigError("orders and thresholds differ in length", "retardation.thresholds")
        elif m == "readosipm":
            raise ConfigError("readosipm needs a retardation schedule", "retardation")
        if self.closure is not None:
            _choice(self.closure, CLOSURES, "closure")
            if m == "sg" and self.closure != "quadratic":
                raise ConfigError("stochastic Galerkin uses the quadratic closure", "closure")
        try:
            self.solver_config()
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err), "solver") from None
        if self.region is not None and len(self.region) not in (2, 4):
            raise ConfigError("expected [xmin, xmax] or [xmin, xmax, ymin, ymax]", "region")
        if self.reference_points is not None and self.reference_points < 1:
            raise ConfigError("must be positive", "reference.points")

    def solver_config(self, **overrides) -> SolverConfig:
        values = {**self.solver, **overrides}
        return SolverConfig(**values)

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "method": self.method,
            "problem": {"preset": self.preset, "params": dict(self.params)},
        }
        if self.mesh is not None:
            out["problem"]["mesh"] = self.mesh
        if self.closure is not None:
            out["closure"] = self.closure
        if self.order is not None:
            out["basis"] = {"order": self.order}
        if self.quadrature is not None:
            out["quadrature"] = asdict(self.quadrature)
        if self.ladder:
            out["ladder"] = [{"order": r.order, "quadrature": asdict(r.quadrature)} for r in self.ladder]
            out["adaptivity"] = {
                "delta_dec": self.delta_dec,
                "delta_inc": self.delta_inc,
                "initial_level": self.initial_level,
            }
        if self.retardation_orders:
            out["retardation"] = {"orders": list(self.retardation_orders), "thresholds": list(self.retardation_thresholds)}
        if self.solver:
            out["solver"] = dict(self.solver)
        ref = {"family": self.reference_family}
        if self.reference_points is not None:
            ref["points"] = self.reference_points
        if self.reference_order is not None:
            ref["order"] = self.reference_order
        out["reference"] = ref
        out["output"] = {"dir": self.output}
        if self.region is not None:
            out["region"] = list(self.region)
        return out

    def dump(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))


_TOP = {
    "name", "method", "problem", "closure", "basis", "quadrature", "ladder",
    "adaptivity", "retardation", "solver", "reference", "output", "region",
}  # fmt: skip


def _solver_section(data) -> dict:
    data = _mapping(data, "solver")
    _check_keys(data, set(_SOLVER_FIELDS), "solver")
    out = {}
    for key, value in data.items():
        path = f"solver.{key}"
        if value is None:
            out[key] = None
            continue
        kind = _SOLVER_FIELDS[key].type
        if key in ("residual_mode",):
            out[key] = str(value)
        elif kind in ("bool",):
            if not isinstance(value, bool):
                raise ConfigError(f"expected true/false, got {value!r}", path)
            out[key] = value
        elif "int" in str(kind) and "float" not in str(kind):
            out[key] = _integer(value, path)
        else:
            out[key] = _number(value, path)
    return out


def parse_config(data) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a parsed YAML mapping."""
    data = _mapping(data, "<root>")
    _check_keys(data, _TOP, "")
    if "method" not in data:
        raise ConfigError("missing field", "method")
    problem = _mapping(data.get("problem"), "problem")
    _check_keys(problem, {"preset", "params", "mesh"}, "problem")
    if "preset" not in problem:
        raise ConfigError("missing field", "problem.preset")
    params = _mapping(problem.get("params"), "problem.params")

    basis = _mapping(data.get("basis"), "basis")
    _check_keys(basis, {"order"}, "basis")
    order = None if basis.get("order") is None else _integer(basis["order"], "basis.order")
    if order is not None and order < 0:
        raise ConfigError("must be non-negative", "basis.order")
    quad = None if data.get("quadrature") is None else QuadratureSpec.parse(data["quadrature"], "quadrature")

    ladder = []
    raw_ladder = data.get("ladder") or []
    if not isinstance(raw_ladder, list):
        raise ConfigError("expected a list of rungs", "ladder")
    for k, rung in enumerate(raw_ladder):
        path = f"ladder[{k}]"
        rung = _mapping(rung, path)
        _check_keys(rung, {"order", "quadrature"}, path)
        if "order" not in rung or "quadrature" not in rung:
            raise ConfigError("each rung needs order and quadrature", path)
        ladder.append(RungSpec(_integer(rung["order"], f"{path}.order"), QuadratureSpec.parse(rung["quadrature"], f"{path}.quadrature")))

    adapt = _mapping(data.get("adaptivity"), "adaptivity")
    _check_keys(adapt, {"delta_dec", "delta_inc", "initial_level"}, "adaptivity")
    retard = _mapping(data.get("retardation"), "retardation")
    _check_keys(retard, {"orders", "thresholds"}, "retardation")
    r_orders = [_integer(v, f"retardation.orders[{k}]") for k, v in enumerate(retard.get("orders") or [])]
    r_thr = [_number(v, f"retardation.thresholds[{k}]") for k, v in enumerate(retard.get("thresholds") or [])]

    ref = _mapping(data.get("reference"), "reference")
    _check_keys(ref, {"points", "family", "order"}, "reference")
    out = _mapping(data.get("output"), "output")
    _check_keys(out, {"dir"}, "output")
    region = data.get("region")
    if region is not None:
        if not isinstance(region, list):
            raise ConfigError("expected a list of bounds", "region")
        region = [_number(v, f"region[{k}]") for k, v in enumerate(region)]

    return ExperimentConfig(
        method=data["method"],
        preset=str(problem["preset"]),
        name=str(data.get("name", "experiment")),
        params=dict(params),
        mesh=problem.get("mesh"),
        closure=data.get("closure"),
        order=order,
        quadrature=quad,
        ladder=ladder,
        delta_dec=_number(adapt.get("delta_dec", 1e-5), "adaptivity.delta_dec"),
        delta_inc=_number(adapt.get("delta_inc", 1e-4), "adaptivity.delta_inc"),
        initial_level=_integer(adapt.get("initial_level", 1), "adaptivity.initial_level"),
        retardation_orders=r_orders,
        retardation_thresholds=r_thr,
        solver=_solver_section(data.get("solver")),
        reference_points=None if ref.get("points") is None else _integer(ref["points"], "reference.points"),
        reference_family=_choice(ref.get("family", "gauss_legendre"), FAMILIES, "reference.family"),
        reference_order=None if ref.get("order") is None else _integer(ref["order"], "reference.order"),
        output=str(out.get("dir", "runs")),
        region=region,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config: {err.strerror}", str(path)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError(f"invalid YAML: {err}", str(path)) from None
    return parse_config(data)
