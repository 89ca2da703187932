"""Exception hierarchy shared by the numerical layers."""

from __future__ import annotations

from typing import Any

import numpy as np


class LtbMapError(Exception):
    """Base class for all package errors."""


class QuadratureError(LtbMapError):
    """Adaptive quadrature hit its depth cap before meeting the tolerance."""

    def __init__(self, message: str, best_estimate: float, error_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class BracketError(LtbMapError, ValueError):
    """The root bracket shows no sign change."""


class DomainError(LtbMapError, ArithmeticError):
    """A formula was evaluated outside its domain (negative radicand etc.)."""


class SingularityError(LtbMapError, ArithmeticError):
    """A right-hand side denominator vanished (to threshold) at the evaluation point."""

    def __init__(self, kind: str, z: float, diagnostics: dict[str, float] | None = None):
        super().__init__(f"{kind} singularity at z={z!r}")
        self.kind = kind
        self.z = z
        self.diagnostics = dict(diagnostics or {})


class StepUnderflowError(LtbMapError):
    """The integrator needed a step below ``min_step``.

    ``z`` and ``y`` hold the last accepted state and ``trajectory`` the partial
    solution up to it.
    """

    def __init__(self, z: float, y: np.ndarray, trajectory: Any = None, cause: str = ""):
        msg = f"stiff/singular: step underflow at z={z!r}"
        if cause:
            msg += f" ({cause})"
        super().__init__(msg)
        self.z = z
        self.y = np.array(y, copy=True)
        self.trajectory = trajectory
        self.cause = cause


class NoCriticalPointError(LtbMapError, ValueError):
    """R_z never vanishes (Omega_Lambda = 1)."""


class NotRemovableError(LtbMapError, ValueError):
    """The 0/0 quotient is only removable for c = c_Lambda."""


class ConfigError(LtbMapError, ValueError):
    """Bad scenario configuration; carries the offending field and line if known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{': '.join([', '.join(where), message]) if where else message}")
        self.field = field
        self.line = line


class StraddleError(LtbMapError, ValueError):
    """R_z changes sign inside an interval that must lie on one side of z_Lambda."""
