"""Exception types shared across the solver stack."""

from __future__ import annotations


class UQError(Exception):
    """Base class for all package errors."""


class InadmissibleDualError(UQError):
    """Dual variables outside the domain of the entropy ansatz."""


class AdmissibilityError(UQError):
    """A physical state (density, pressure) left the admissible set.

    ``cell`` and ``point`` identify where the violation was detected when known.
    """

    def __init__(self, message: str, cell: int | None = None, point: int | None = None, step: int | None = None):
        super().__init__(message)
        self.cell = cell
        self.point = point
        self.step = step


class IllConditionedHessian(UQError):
    """Factorization of the dual Hessian failed.

    ``rule`` carries a short description of the quadrature rule in use, since
    this failure is almost always a property of the rule (negative weights,
    too few points) rather than of the moments.
    """

    def __init__(self, message: str, rule: str | None = None, cells=None):
        super().__init__(message if rule is None else f"{message} [rule: {rule}]")
        self.rule = rule
        self.cells = cells


class LineSearchFailure(UQError):
    """Backtracking could not produce an admissible, decreasing dual step."""


class NonConvergence(UQError):
    """An iteration hit its cap; ``report`` holds whatever was recorded."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class UnsupportedStateError(UQError):
    """Riemann data outside the solver's supported range (e.g. vacuum)."""


class MeshError(UQError):
    """Malformed or invalid mesh file/geometry."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class IncompatibleSnapshotError(UQError):
    """A stored moment snapshot does not match the active mesh or basis."""


class ConfigError(UQError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class PreconditionError(UQError, ValueError):
    """An operation was called on input that violates its documented precondition."""


class CollocationFailure(UQError):
    """Deterministic solves failed at one or more collocation points.

    ``failures`` maps point index to the error message.
    """

    def __init__(self, message: str, failures: dict | None = None):
        super().__init__(message)
        self.failures = failures or {}
