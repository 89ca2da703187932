"""Open FRW dust as an oracle for the general system.

The model is E = r^2/2, M = r^3/2, R0 = c r, so R = r a(t) with a(t0) = c and
a conformal-time parametrization

    a   = F(eta) = (cosh eta - 1)/2 + c cosh eta + k sinh eta,   k = sqrt(c + c^2)
    t   = G(eta)

Two normalizations of G are offered. ``constraint_consistent`` uses
dG/deta = F, for which da/dt squared equals 1 + 1/a exactly. ``paper_sqrt2``
is larger by sqrt(2) and misses that constraint by a factor of two; it is kept
so the discrepancy can be reproduced.

Two families of reference solutions live here:

* ``closed_solution``: r from the luminosity data, t from the scale factor at
  a = c(1+z0)/(1+z). This satisfies the redshift relation but not the radial
  null condition, so it is not a solution of the general system.
* ``GeodesicFrwCurve``: an actual radial null geodesic of the FRW metric. It
  generates its own R[z] and solves the general system exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import taylor
from .critical import find_z_lambda
from .exceptions import DomainError, NoCriticalPointError, NotRemovableError, StepUnderflowError
from .kernel import GeodesicState, LTBModel, SingularityReport, assemble_rhs, classify_singularity, integrate_general
from .luminosity import CosmoParams, LuminosityCurve
from .numerics import EventRecord, EventSpec, IvpSpec, Trajectory, find_root_bracketed, solve_ivp

CONVENTIONS = ("constraint_consistent", "paper_sqrt2")
_CONVENTION_ALIASES = {"consistent": "constraint_consistent", "paper": "paper_sqrt2"}
_C_LAMBDA_RTOL = 1e-9
SERIES_ORDER = 8


def normalize_convention(name: str) -> str:
    name = _CONVENTION_ALIASES.get(name, name)
    if name not in CONVENTIONS:
        raise ValueError(f"unknown convention {name!r}")
    return name


@dataclass(frozen=True)
class FrwParams:
    c: float
    z0: float
    convention: str = "constraint_consistent"
    k_c: float = field(init=False)

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.z0 > 0:
            raise ValueError("z0 must be positive")
        object.__setattr__(self, "convention", normalize_convention(self.convention))
        object.__setattr__(self, "k_c", math.sqrt(self.c + self.c * self.c))

    @property
    def eta_min(self) -> float:
        """Left end of the range where F is increasing (F = 0 there)."""
        return -math.atanh(2.0 * self.k_c / (1.0 + 2.0 * self.c))

    @property
    def t0(self) -> float:
        return time_param(0.0, self)

    def model(self) -> LTBModel:
        return LTBModel.frw(self.c, self.t0)

    def with_c(self, c: float) -> "FrwParams":
        return FrwParams(c, self.z0, self.convention)


@dataclass(frozen=True)
class ConventionAudit:
    convention: str
    max_constraint_residual: float
    verdict: bool
    residuals: tuple[float, ...] = ()
    scale_factors: tuple[float, ...] = ()


# --------------------------------------------------------------------------
# parametric solution


def scale_factor_param(eta: float, p: FrwParams):
    return (np.cosh(eta) - 1.0) / 2.0 + p.c * np.cosh(eta) + p.k_c * np.sinh(eta)


def scale_factor_deriv(eta: float, p: FrwParams):
    return (0.5 + p.c) * np.sinh(eta) + p.k_c * np.cosh(eta)


def time_param(eta: float, p: FrwParams):
    g = (np.sinh(eta) - eta) / 2.0 + p.c * np.sinh(eta) + p.k_c * np.cosh(eta)
    if p.convention == "paper_sqrt2":
        return math.sqrt(2.0) * g
    return g


def time_param_deriv(eta: float, p: FrwParams):
    f = scale_factor_param(eta, p)
    return math.sqrt(2.0) * f if p.convention == "paper_sqrt2" else f


def invert_scale(a: float, p: FrwParams, tol: float = 1e-14) -> float:
    """eta with F(eta) = a, by bracketed root finding on the increasing branch."""
    if not a > 0:
        raise DomainError(f"scale factor must be positive, got {a}")
    lo = p.eta_min
    hi = 1.0
    while scale_factor_param(hi, p) < a:
        hi *= 2.0
        if hi > 700.0:
            raise DomainError(f"scale factor {a} out of range")
    return find_root_bracketed(lambda e: scale_factor_param(e, p) - a, lo, hi, tol)


def audit_convention(p: FrwParams, eta_grid: Sequence[float], tol: float = 1e-10) -> ConventionAudit:
    """Residual of (da/dt)^2 - (1 + 1/a) on the grid for the active convention."""
    eta = np.asarray(eta_grid, dtype=float)
    if np.any(eta <= p.eta_min):
        raise ValueError("eta grid leaves the invertible range")
    a = scale_factor_param(eta, p)
    adot = scale_factor_deriv(eta, p) / np.array([time_param_deriv(e, p) for e in eta])
    res = adot**2 - (1.0 + 1.0 / a)
    worst = float(np.max(np.abs(res))) if res.size else 0.0
    return ConventionAudit(p.convention, worst, worst <= tol, tuple(res), tuple(a))


# --------------------------------------------------------------------------
# closed forms built from the luminosity data


def scale_at(z: float, p: FrwParams) -> float:
    return p.c * (1.0 + p.z0) / (1.0 + z)


def adot_at(a: float) -> float:
    """da/dt on the expanding branch under the consistent normalization."""
    return math.sqrt(1.0 + 1.0 / a)


def closed_solution(z: float, p: FrwParams, curve: LuminosityCurve) -> GeodesicState:
    a = scale_at(z, p)
    r = curve.cumulative(1.0 + z) / ((1.0 + p.z0) * p.c)
    t = float(time_param(invert_scale(a, p), p))
    return GeodesicState(float(z), r, t, 0.5 * r**3)


def closed_derivatives(z: float, p: FrwParams, curve: LuminosityCurve) -> np.ndarray:
    """(dr/dz, dt/dz, dM/dz) of the closed forms."""
    q = 1.0 + z
    k = (1.0 + p.z0) * p.c
    r = curve.cumulative(q) / k
    dr = curve.integrand(q) / k
    a = scale_at(z, p)
    eta = invert_scale(a, p)
    da_deta = float(scale_factor_deriv(eta, p))
    dt = float(time_param_deriv(eta, p)) / da_deta * (-a / q)
    return np.array([dr, dt, 1.5 * r * r * dr])


def initial_state(p: FrwParams, curve: LuminosityCurve) -> GeodesicState:
    return closed_solution(p.z0, p, curve)


def energy_density(z: float, p: FrwParams, curve: LuminosityCurve | None = None) -> float:
    return 1.5 / scale_at(z, p) ** 3


def energy_density_raw(z: float, p: FrwParams, curve: LuminosityCurve) -> float:
    """M'(r) / (R^2 R') with R = r a and R' = a at fixed t."""
    st = closed_solution(z, p, curve)
    a = scale_at(z, p)
    R = st.r * a
    return 1.5 * st.r**2 / (R * R * a)


# --------------------------------------------------------------------------
# the critical redshift and the removable quotient


def c_lambda(p: CosmoParams, z0: float) -> float:
    if p.omega_lambda >= 1.0:
        raise NoCriticalPointError("no critical point: R_z > 0 for Omega_Lambda = 1")
    q = 1.0 + find_z_lambda(p).z_lambda
    om = p.omega_lambda
    return q / ((1.0 + z0) * (om + (1.0 - om) * q**3) ** (1.0 / 3.0))


def horizon_gap(z: float, p: FrwParams, curve: LuminosityCurve) -> float:
    """2M - R along the closed forms."""
    r = curve.cumulative(1.0 + z) / ((1.0 + p.z0) * p.c)
    return r**3 - curve.R(z)


def _is_c_lambda(p: FrwParams, curve: LuminosityCurve) -> bool:
    if curve.omega >= 1.0:
        return False
    return abs(p.c - c_lambda(curve.params, p.z0)) <= _C_LAMBDA_RTOL * p.c


def switch_width(z_lambda: float) -> float:
    return 1e-3 * (1.0 + z_lambda)


def plain_quotient(z: float, p: FrwParams, curve: LuminosityCurve) -> float:
    """Q = -R_z / (2M - R) without regularization."""
    return -curve.dRdz(z) / horizon_gap(z, p, curve)


@dataclass
class QuotientSeries:
    """Taylor series of Q about z_Lambda for c = c_Lambda."""

    z_lambda: float
    coeffs: np.ndarray
    h_switch: float

    def __call__(self, z: float) -> float:
        return taylor.evaluate(self.coeffs, z - self.z_lambda)


def quotient_series(p: FrwParams, curve: LuminosityCurve, order: int = SERIES_ORDER) -> QuotientSeries:
    """Both 2M - R and -R_z vanish at z_Lambda; divide their shifted series."""
    if not _is_c_lambda(p, curve):
        raise NotRemovableError("quotient not removable here: c differs from c_Lambda")
    zl = find_z_lambda(curve.params).z_lambda
    n = order + 2
    cum = curve.cumulative_series(zl, n)
    k3 = ((1.0 + p.z0) * p.c) ** 3
    gap = taylor.mul(taylor.mul(cum, cum), cum) / k3 - curve.R_series(zl, n)
    num = -taylor.derivative(curve.R_series(zl, n))
    coeffs = taylor.div(taylor.shift_down(num), taylor.shift_down(gap))[: order + 1]
    return QuotientSeries(zl, coeffs, switch_width(zl))


def regularized_quotient(
    z: float, p: FrwParams, curve: LuminosityCurve, series: QuotientSeries | None = None
) -> float:
    """Q(z) = -R_z/(2M - R), continued through z_Lambda by its Taylor series."""
    series = series or quotient_series(p, curve)
    if abs(z - series.z_lambda) <= series.h_switch:
        return series(z)
    return plain_quotient(z, p, curve)


def quotient_limit(p: CosmoParams) -> float:
    """Q(z_Lambda) = (1 - Omega) q^2 I(q)^2 / 2 with q = 1 + z_Lambda."""
    q = 1.0 + find_z_lambda(p).z_lambda
    om = p.omega_lambda
    return (1.0 - om) * q * q / (om + (1.0 - om) * q**3) / 2.0


def alternate_limit(p: CosmoParams) -> float:
    """(1 - Omega) q I(q) / 2; off from the true limit by a factor q I(q), 3/2 at Omega = 0."""
    q = 1.0 + find_z_lambda(p).z_lambda
    om = p.omega_lambda
    return (1.0 - om) * q / math.sqrt(om + (1.0 - om) * q**3) / 2.0


def h_factor(z: float, r: float, M: float, R: float) -> float:
    """H = R (sqrt(2E + 2M/R) + sqrt(1 + 2E)) with E = r^2/2."""
    return R * (math.sqrt(r * r + 2.0 * M / R) + math.sqrt(1.0 + r * r))


# --------------------------------------------------------------------------
# crossing z_Lambda


@dataclass
class CrossingResult:
    trajectory: Trajectory
    c: float
    c_lambda: float
    z_lambda: float
    removable: bool
    regularized: bool
    reports: list[SingularityReport]
    diagnostics: dict[str, float]

    @property
    def status(self) -> str:
        return self.trajectory.status

    @property
    def terminal_kind(self) -> str | None:
        ends = [e.name for e in self.trajectory.events if e.terminal]
        return ends[-1] if ends and self.trajectory.terminated else None


def _fit_exponent(fn, z_sing: float, side: float, offsets: np.ndarray) -> float:
    zs = z_sing + side * offsets
    vals = np.array([abs(fn(z)) for z in zs])
    slope, _ = np.polyfit(np.log(offsets), np.log(vals), 1)
    return float(slope)


def cross_singularity(
    p: FrwParams,
    curve: LuminosityCurve,
    z_range: tuple[float, float],
    spec: IvpSpec | None = None,
) -> CrossingResult:
    """Integrate t along the closed-form (r, M) through or up to z_Lambda.

    dt/dz = -H Q with Q regularized when c = c_Lambda; otherwise the run
    stops at the R_z zero and reports local power-law exponents of dt/dz and
    of da/dt there.
    """
    spec = spec or IvpSpec(rel_tol=1e-11, abs_tol=1e-13)
    z_a, z_b = map(float, z_range)
    k = (1.0 + p.z0) * p.c
    has_critical = curve.omega < 1.0
    zl = find_z_lambda(curve.params).z_lambda if has_critical else math.inf
    cl = c_lambda(curve.params, p.z0) if has_critical else math.nan
    removable = has_critical and _is_c_lambda(p, curve)
    contains = min(z_a, z_b) <= zl <= max(z_a, z_b)
    regularized = removable and contains
    series = quotient_series(p, curve) if regularized else None

    def quotient(z):
        if series is not None:
            return regularized_quotient(z, p, curve, series)
        return plain_quotient(z, p, curve)

    def rhs(z, y):
        q = 1.0 + z
        r = curve.cumulative(q) / k
        dr = curve.integrand(q) / k
        M = 0.5 * r**3
        dt = -h_factor(z, r, M, curve.R(z)) * quotient(z)
        return np.array([dr, dt, 1.5 * r * r * dr])

    def gap(z, y):
        return 2.0 * y[2] - curve.R(z)

    def critical(z, y):
        return curve.dRdz(z)

    # without the removable 0/0 both zeros are genuine singularities of dt/dz
    terminal = not removable
    events = [
        EventSpec(gap, "any", terminal, 1e-12, "horizon"),
        EventSpec(critical, "any", terminal and contains, 1e-12, "critical_redshift"),
    ]
    start = closed_solution(z_a, p, curve)
    try:
        traj = solve_ivp(rhs, start.as_array(), z_a, z_b, spec, events)
    except StepUnderflowError as exc:
        # the pole in dt/dz is only logarithmically integrable, so steps
        # collapse just short of the zero instead of straddling it
        traj = exc.trajectory
        if removable or traj is None:
            raise
        R = curve.R(exc.z)
        near = {"horizon": abs(gap(exc.z, exc.y)) / R, "critical_redshift": abs(critical(exc.z, exc.y)) / R}
        name = min(near, key=near.get)
        if near[name] > 1e-6:
            raise
        traj.events.append(EventRecord(name, 0 if name == "horizon" else 1, exc.z, exc.y.copy(), True))
        traj.status = "terminal_event"
    reports = classify_singularity(traj, p.model(), curve)
    diag: dict[str, float] = {"regularized": float(regularized)}
    if traj.terminated:
        offsets = np.logspace(-6, -3, 13)
        side = -1.0 if z_b > z_a else 1.0

        def dtdz(z):
            return rhs(z, None)[1]

        def adot(z):
            return -scale_at(z, p) / ((1.0 + z) * dtdz(z))

        diag["dtdz_exponent"] = _fit_exponent(dtdz, traj.z_end, side, offsets)
        diag["adot_exponent"] = _fit_exponent(adot, traj.z_end, side, offsets)
        diag["z_terminal"] = traj.z_end
    return CrossingResult(traj, p.c, cl, zl, removable, regularized, reports, diag)


# --------------------------------------------------------------------------
# comparisons with the general system


@dataclass(frozen=True)
class OracleReport:
    max_rel_deviation: float
    per_component: dict[str, float]
    z_range: tuple[float, float]
    status: str
    n_samples: int


def _compare(traj: Trajectory, reference, z_range, n: int) -> OracleReport:
    zs = np.linspace(z_range[0], z_range[1], n)
    names = ("r", "t", "M")
    worst = dict.fromkeys(names, 0.0)
    for z in zs:
        got = traj(z)
        ref = reference(z).as_array()
        for i, name in enumerate(names):
            worst[name] = max(worst[name], abs(got[i] - ref[i]) / max(abs(ref[i]), 1e-300))
    return OracleReport(max(worst.values()), worst, tuple(z_range), traj.status, n)


def oracle_compare(
    p: FrwParams,
    curve: LuminosityCurve,
    z_range: tuple[float, float],
    spec: IvpSpec | None = None,
    n_samples: int = 200,
) -> OracleReport:
    """General system from the closed-form state at z0, against the closed forms."""
    spec = spec or IvpSpec(rel_tol=1e-10, abs_tol=1e-13)
    z_end = z_range[1] if abs(z_range[1] - p.z0) >= abs(z_range[0] - p.z0) else z_range[0]
    traj = integrate_general(initial_state(p, curve), curve, p.model(), z_end, spec)
    lo, hi = sorted((max(min(z_range), min(traj.z_start, traj.z_end)), min(max(z_range), max(traj.z_start, traj.z_end))))
    return _compare(traj, lambda z: closed_solution(z, p, curve), (lo, hi), n_samples)


class GeodesicFrwCurve:
    """Data R[z] read off a genuine radial null geodesic of open FRW dust.

    The geodesic starts at comoving radius ``r0`` when a = c (conformal time 0)
    and runs into the past: r = sinh(asinh(r0) - eta), a = c(1+z0)/(1+z).
    """

    def __init__(self, p: FrwParams, r0: float):
        if p.convention != "constraint_consistent":
            raise ValueError("the geodesic oracle needs the constraint-consistent time")
        if not r0 > 0:
            raise ValueError("r0 must be positive")
        self.p = p
        self.r0 = r0
        self._chi0 = math.asinh(r0)

    def _eta(self, z: float) -> float:
        return invert_scale(scale_at(z, self.p), self.p)

    def state(self, z: float) -> GeodesicState:
        eta = self._eta(z)
        r = math.sinh(self._chi0 - eta)
        return GeodesicState(float(z), r, float(time_param(eta, self.p)), 0.5 * r**3)

    def R(self, z: float) -> float:
        return self.state(z).r * scale_at(z, self.p)

    def dRdz(self, z: float) -> float:
        a = scale_at(z, self.p)
        r = self.state(z).r
        q = 1.0 + z
        dr = math.sqrt(1.0 + r * r) / (q * adot_at(a))
        return dr * a - r * a / q

    def dtdz(self, z: float) -> float:
        a = scale_at(z, self.p)
        return -a / ((1.0 + z) * adot_at(a))


def geodesic_oracle_compare(
    p: FrwParams,
    r0: float,
    z_range: tuple[float, float],
    spec: IvpSpec | None = None,
    n_samples: int = 200,
) -> OracleReport:
    """General system driven by the geodesic's own R[z], against that geodesic."""
    spec = spec or IvpSpec(rel_tol=1e-11, abs_tol=1e-13)
    curve = GeodesicFrwCurve(p, r0)
    init = curve.state(p.z0)
    traj = integrate_general(init, curve, p.model(), z_range[1], spec)
    return _compare(traj, curve.state, (z_range[0], min(z_range[1], traj.z_end)), n_samples)


def general_dtdz(z: float, state: GeodesicState, p: FrwParams, curve) -> float:
    return float(assemble_rhs(state, curve, p.model())[1])


__all__ = [
    "CONVENTIONS",
    "ConventionAudit",
    "CrossingResult",
    "FrwParams",
    "GeodesicFrwCurve",
    "OracleReport",
    "QuotientSeries",
    "adot_at",
    "audit_convention",
    "c_lambda",
    "closed_derivatives",
    "closed_solution",
    "cross_singularity",
    "energy_density",
    "energy_density_raw",
    "general_dtdz",
    "geodesic_oracle_compare",
    "horizon_gap",
    "initial_state",
    "invert_scale",
    "oracle_compare",
    "alternate_limit",
    "plain_quotient",
    "quotient_limit",
    "quotient_series",
    "regularized_quotient",
    "scale_at",
    "scale_factor_deriv",
    "scale_factor_param",
    "switch_width",
    "time_param",
    "time_param_deriv",
]
