"""The critical redshift z_Lambda where R_z vanishes, and its analytic bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ._kernels import lum_integrand
from .certificates import BoundCertificate
from .exceptions import NoCriticalPointError
from .luminosity import CosmoParams, LuminosityCurve
from .numerics import QuadratureSpec, find_root_bracketed, integrate_adaptive

DEFAULT_OMEGA_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99)
Q_MIN = 2.25  # 1 + z_Lambda at Omega_Lambda = 0
_BRACKET_CAP = 1e9


@dataclass(frozen=True)
class CriticalPoint:
    omega_lambda: float
    z_lambda: float
    residual: float
    tol: float


@dataclass(frozen=True)
class BoundConstants:
    c1: float
    c2: float
    c3: float
    k1_by_omega: dict[float, float]


@dataclass(frozen=True)
class ZLambdaBounds:
    lower: float
    upper: float
    c1: float
    c2: float
    c3: float


def find_z_lambda(p: CosmoParams, tol: float = 1e-12, curve: LuminosityCurve | None = None) -> CriticalPoint:
    """Root of N(z) = (1+z) I(1+z) - int_1^{1+z} I, which is strictly decreasing.

    The bracket starts at [1, 2] and is pushed right by doubling.
    """
    if p.omega_lambda >= 1.0:
        raise NoCriticalPointError("no critical point: R_z > 0 for Omega_Lambda = 1")
    curve = curve or LuminosityCurve(p)
    lo, hi = 1.0, 2.0
    while curve.numerator(hi) > 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > _BRACKET_CAP:
            raise NoCriticalPointError(f"no sign change of R_z below z={_BRACKET_CAP:g}")
    z = find_root_bracketed(curve.numerator, lo, hi, tol)
    return CriticalPoint(p.omega_lambda, z, curve.numerator(z), tol)


def _k1(omega: float, quad: QuadratureSpec) -> float:
    q = Q_MIN

    def weight(y):
        return lum_integrand(y, omega) ** 2 * (y**3 - 1.0)

    kq = weight(q)
    return 4.0 / 3.0 * integrate_adaptive(lambda y: lum_integrand(y, omega) * (kq - weight(y)), 1.0, q, quad)


def zlambda_bound_constants(
    quad: QuadratureSpec | None = None, omega_grid: Sequence[float] = DEFAULT_OMEGA_GRID
) -> BoundConstants:
    """c1 = inf over the grid of k1(Omega), c2 = 2.25^4, c3 = k2^2."""
    quad = quad or QuadratureSpec(abs_tol=1e-15, rel_tol=1e-13)
    k1 = {float(om): _k1(float(om), quad) for om in omega_grid}
    inv_k2 = integrate_adaptive(lambda y: 1.0 / math.sqrt(1.0 + y**3), 1.0, Q_MIN, quad)
    return BoundConstants(min(k1.values()), Q_MIN**4, 1.0 / inv_k2**2, k1)


def zlambda_bounds(omega: float, constants: BoundConstants) -> ZLambdaBounds:
    lower = (constants.c1 * math.log(1.0 / (1.0 - omega)) + constants.c2) ** 0.25
    upper = constants.c3 / (1.0 - omega)
    return ZLambdaBounds(lower, upper, constants.c1, constants.c2, constants.c3)


def verify_zlambda_bounds(
    p: CosmoParams, cp: CriticalPoint, constants: BoundConstants | None = None
) -> BoundCertificate:
    """Certify lower <= 1 + z_Lambda <= upper.

    Margins are padded by the root tolerance so that the equality case at
    Omega_Lambda = 0 is not lost to the last bit of the root.
    """
    constants = constants or zlambda_bound_constants()
    b = zlambda_bounds(p.omega_lambda, constants)
    q = 1.0 + cp.z_lambda
    margins = (q - b.lower + cp.tol, b.upper - q + cp.tol)
    return BoundCertificate.from_margins(
        "zlambda_bounds",
        {"c1": b.c1, "c2": b.c2, "c3": b.c3, "lower": b.lower, "upper": b.upper, "q": q},
        (cp.z_lambda, cp.z_lambda),
        margins,
    )
