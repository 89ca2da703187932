"""Luminosity-distance data and the shell-radius curve R[z] it prescribes.

With the flat Lambda-family integrand ``I(y) = (Omega + (1 - Omega) y^3)^(-1/2)``
the data are

    D_L(z) = (1 + z) * int_1^{1+z} I(y) dy,        R[z] = D_L / (1 + z)^2.

All quantities are dimensionless (distances in units of c/H0). First and
second z-derivatives of R are analytic in the cumulative integral, so the
ODE right-hand sides never difference quadrature output.
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, taylor
from .numerics import QuadratureSpec

# checkpoint spacing in log(y) for the cumulative-integral table
_LOG_STEP = 1.0 / 16.0


@dataclass(frozen=True)
class CosmoParams:
    omega_lambda: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.omega_lambda <= 1.0:
            raise ValueError(f"omega_lambda must lie in [0, 1], got {self.omega_lambda}")

    def integrand(self, y: float) -> float:
        return integrand(y, self)

    def luminosity_distance(self, z: float) -> float:
        return luminosity_distance(z, self)

    def shell_radius(self, z: float) -> float:
        return shell_radius(z, self)


def integrand(y: float, p: CosmoParams) -> float:
    """I(y) = 1 / sqrt(Omega + (1 - Omega) y^3); positive for y >= 1."""
    return float(_kernels.lum_integrand(float(y), p.omega_lambda))


def _integrand_deriv(y: float, omega: float) -> float:
    return -1.5 * (1.0 - omega) * y * y * float(_kernels.lum_integrand(y, omega)) ** 3


def _cumulative(q: float, p: CosmoParams, quad: QuadratureSpec | None = None) -> float:
    quad = quad or QuadratureSpec()
    val, _, _ = _kernels.gk_integrate(
        _kernels.LUM, 1.0, q, p.omega_lambda, 0.0, 0.0, quad.abs_tol, quad.rel_tol, quad.max_depth
    )
    return float(val)


def luminosity_distance(z: float, p: CosmoParams, quad: QuadratureSpec | None = None) -> float:
    if z < 0:
        raise ValueError("z must be non-negative")
    return (1.0 + z) * _cumulative(1.0 + z, p, quad)


def shell_radius(z: float, p: CosmoParams, quad: QuadratureSpec | None = None) -> float:
    if z < 0:
        raise ValueError("z must be non-negative")
    return _cumulative(1.0 + z, p, quad) / (1.0 + z)


def _first_deriv(q: float, cum: float, omega: float) -> float:
    return (q * float(_kernels.lum_integrand(q, omega)) - cum) / (q * q)


def _second_deriv(q: float, cum: float, omega: float) -> float:
    i_q = float(_kernels.lum_integrand(q, omega))
    return _integrand_deriv(q, omega) / q - 2.0 * i_q / q**2 + 2.0 * cum / q**3


def shell_radius_deriv(z: float, p: CosmoParams, quad: QuadratureSpec | None = None) -> float:
    """R_z = [(1+z) I(1+z) - int_1^{1+z} I] / (1+z)^2."""
    q = 1.0 + z
    return _first_deriv(q, _cumulative(q, p, quad), p.omega_lambda)


def shell_radius_second_deriv(z: float, p: CosmoParams, quad: QuadratureSpec | None = None) -> float:
    q = 1.0 + z
    return _second_deriv(q, _cumulative(q, p, quad), p.omega_lambda)


@dataclass
class LuminosityCurve:
    """R[z] and its derivatives for one Omega_Lambda, with a shared integral cache.

    The cumulative integral is tabulated at checkpoints ``y_k = exp(k/16)``;
    each lookup integrates only the stretch past the nearest checkpoint.
    The table grows on demand under a lock, so concurrent readers see the same
    values.
    """

    params: CosmoParams
    quad: QuadratureSpec = field(default_factory=lambda: QuadratureSpec(abs_tol=1e-15, rel_tol=1e-13))
    _nodes: list[float] = field(default_factory=lambda: [1.0], init=False, repr=False)
    _cum: list[float] = field(default_factory=lambda: [0.0], init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    @property
    def omega(self) -> float:
        return self.params.omega_lambda

    def _segment(self, a: float, b: float) -> float:
        q = self.quad
        val, _, _ = _kernels.gk_integrate(
            _kernels.LUM, a, b, self.omega, 0.0, 0.0, q.abs_tol, q.rel_tol, q.max_depth
        )
        return float(val)

    def cumulative(self, q: float) -> float:
        """int_1^q I(y) dy for q >= 1."""
        if q < 1.0:
            raise ValueError("cumulative integral needs q >= 1")
        with self._lock:
            while self._nodes[-1] < q:
                k = len(self._nodes)
                y_next = math.exp(k * _LOG_STEP)
                self._cum.append(self._cum[-1] + self._segment(self._nodes[-1], y_next))
                self._nodes.append(y_next)
            i = bisect.bisect_right(self._nodes, q) - 1
            y_k, c_k = self._nodes[i], self._cum[i]
        return c_k + self._segment(y_k, q)

    def integrand(self, y: float) -> float:
        return float(_kernels.lum_integrand(float(y), self.omega))

    def D_L(self, z: float) -> float:
        return (1.0 + z) * self.cumulative(1.0 + z)

    def R(self, z: float) -> float:
        return self.cumulative(1.0 + z) / (1.0 + z)

    def dRdz(self, z: float) -> float:
        q = 1.0 + z
        return _first_deriv(q, self.cumulative(q), self.omega)

    def d2Rdz2(self, z: float) -> float:
        q = 1.0 + z
        return _second_deriv(q, self.cumulative(q), self.omega)

    def numerator(self, z: float) -> float:
        """(1+z) I(1+z) - int_1^{1+z} I; carries the sign of R_z."""
        q = 1.0 + z
        return q * self.integrand(q) - self.cumulative(q)

    def cumulative_series(self, z: float, order: int = 10) -> np.ndarray:
        """Taylor coefficients of int_1^{1+z+x} I in x."""
        q = 1.0 + z
        n = order + 1
        poly = np.zeros(n)
        # Omega + (1 - Omega)(q + x)^3
        cubic = (1.0 - self.omega) * np.array([q**3, 3 * q**2, 3 * q, 1.0])
        poly[: min(4, n)] = cubic[: min(4, n)]
        poly[0] += self.omega
        return taylor.integrate(taylor.power(poly, -0.5), self.cumulative(q))

    def R_series(self, z: float, order: int = 10) -> np.ndarray:
        """Taylor coefficients of R[z + x] in x."""
        cum = self.cumulative_series(z, order)
        denom = np.zeros(order + 1)
        denom[0] = 1.0 + z
        if order > 0:
            denom[1] = 1.0
        return taylor.div(cum, denom)
