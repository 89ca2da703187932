"""Reconstruct LTB mass and energy data along the past light cone from luminosity distances."""

from ._accel import backend
from .certificates import BoundCertificate
from .critical import CriticalPoint, find_z_lambda, verify_zlambda_bounds, zlambda_bound_constants
from .exceptions import (
    BracketError,
    ConfigError,
    DomainError,
    LtbMapError,
    NoCriticalPointError,
    NotRemovableError,
    QuadratureError,
    SingularityError,
    StepUnderflowError,
    StraddleError,
)
from .kernel import GeodesicState, KernelEval, LTBModel, assemble_rhs, eval_J, eval_kernel, integrate_general
from .luminosity import CosmoParams, LuminosityCurve
from .numerics import EventSpec, IvpSpec, QuadratureSpec, Trajectory, find_root_bracketed, integrate_adaptive, solve_ivp

__version__ = "0.1.0"

__all__ = [
    "BoundCertificate",
    "BracketError",
    "ConfigError",
    "CosmoParams",
    "CriticalPoint",
    "DomainError",
    "EventSpec",
    "GeodesicState",
    "IvpSpec",
    "KernelEval",
    "LTBModel",
    "LtbMapError",
    "LuminosityCurve",
    "NoCriticalPointError",
    "NotRemovableError",
    "QuadratureError",
    "QuadratureSpec",
    "SingularityError",
    "StepUnderflowError",
    "StraddleError",
    "Trajectory",
    "assemble_rhs",
    "backend",
    "eval_J",
    "eval_kernel",
    "find_root_bracketed",
    "find_z_lambda",
    "integrate_adaptive",
    "integrate_general",
    "solve_ivp",
    "verify_zlambda_bounds",
    "zlambda_bound_constants",
]
