"""Pointwise LTB kernel: the J-manifold, its partials, and the general ODE system.

State along the past null cone is ``X = (r, t, M)`` as functions of z. The
shell radius R[z] comes from the data curve; the model supplies E(r), R0(r)
and the signs sigma = sgn dR/dt, delta = sgn dR/dr.

The convention for A carries the redshift factor::

    A = sigma sqrt(2E + 2M/R) sqrt(1 + 2E) / (1 + z)

which is what the radial null condition produces (see ``u_matrix``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from . import _kernels
from .exceptions import DomainError, QuadratureError, SingularityError, StepUnderflowError
from .numerics import EventRecord, EventSpec, IvpSpec, QuadratureSpec, Trajectory, solve_ivp

ScalarFn = Callable[[float], float]

KERNEL_QUAD = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-13)
DENOM_THRESHOLD = 1e-12
HORIZON_SNAP = 1e-6


class Curve(Protocol):
    def R(self, z: float) -> float: ...

    def dRdz(self, z: float) -> float: ...


def _sign(name: str, value: int) -> int:
    if value not in (1, -1):
        raise ValueError(f"{name} must be +1 or -1, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class LTBModel:
    E: ScalarFn
    Eprime: ScalarFn
    R0: ScalarFn
    R0prime: ScalarFn
    sigma: int = 1
    delta: int = 1
    t0: float = 0.0
    name: str = "custom"
    params: dict[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        _sign("sigma", self.sigma)
        _sign("delta", self.delta)

    @classmethod
    def frw(cls, c: float, t0: float, sigma: int = 1, delta: int = 1) -> "LTBModel":
        """E = r^2/2, R0 = c r."""
        if c <= 0:
            raise ValueError("c must be positive")
        return cls(
            E=lambda r: 0.5 * r * r,
            Eprime=lambda r: r,
            R0=lambda r: c * r,
            R0prime=lambda r: c,
            sigma=sigma,
            delta=delta,
            t0=t0,
            name="frw",
            params={"c": c},
        )

    @classmethod
    def power_law(cls, e0: float, p: float, c: float, t0: float, sigma: int = 1, delta: int = 1) -> "LTBModel":
        """E = e0 r^p, R0 = c r. ``p = 0`` gives constant energy."""
        if e0 <= 0 or c <= 0:
            raise ValueError("e0 and c must be positive")
        return cls(
            E=lambda r: e0 * r**p,
            Eprime=lambda r: e0 * p * r ** (p - 1.0) if p != 0 else 0.0,
            R0=lambda r: c * r,
            R0prime=lambda r: c,
            sigma=sigma,
            delta=delta,
            t0=t0,
            name="power_law",
            params={"e0": e0, "p": p, "c": c},
        )

    @classmethod
    def unit_energy(cls, R0: ScalarFn, R0prime: ScalarFn, t0: float = 0.0) -> "LTBModel":
        """E = 1 with sigma = delta = 1."""
        return cls(lambda r: 1.0, lambda r: 0.0, R0, R0prime, 1, 1, t0, "unit_energy")


@dataclass(frozen=True)
class GeodesicState:
    z: float
    r: float
    t: float
    M: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.t, self.M])

    @classmethod
    def from_array(cls, z: float, y: Sequence[float]) -> "GeodesicState":
        return cls(float(z), float(y[0]), float(y[1]), float(y[2]))


@dataclass(frozen=True)
class KernelEval:
    R: float
    R0: float
    h: float
    xi: float
    xi_sharp: float
    JR: float
    JR0: float
    JM: float
    JE: float
    F: float
    G: float
    A: float
    B: float
    detU: float
    denom_geo: float
    denom_sol: float
    E: float
    Eprime: float
    R0prime: float
    z: float
    M: float


@dataclass(frozen=True)
class SingularityReport:
    kind: str
    z_location: float
    diagnostics: dict[str, float]
    possibly_removable: bool = False


def _model_values(r: float, model: LTBModel) -> tuple[float, float, float, float]:
    return float(model.E(r)), float(model.Eprime(r)), float(model.R0(r)), float(model.R0prime(r))


def eval_J(R: float, state: GeodesicState, model: LTBModel, quad: QuadratureSpec = KERNEL_QUAD) -> float:
    """J = sqrt(2)(t - t0) - sigma int_{R0}^{R} sqrt(tau / (tau E + M)) dtau (oriented)."""
    E, _, R0, _ = _model_values(state.r, model)
    if R <= 0 or R0 <= 0:
        raise DomainError("R and R0 must be positive")
    if min(R, R0) * E + state.M <= 0:
        raise DomainError("tau E + M <= 0 on the integration range")
    val, _, _ = _kernels.gk_integrate(
        _kernels.ROOT, R0, R, E, state.M, 0.0, quad.abs_tol, quad.rel_tol, quad.max_depth
    )
    return math.sqrt(2.0) * (state.t - model.t0) - model.sigma * float(val)


def j_value(R: float, R0: float, M: float, E: float, t: float, t0: float, sigma: int = 1) -> float:
    """eval_J on raw numbers, used for finite-difference checks in each argument."""
    model = LTBModel(lambda r: E, lambda r: 0.0, lambda r: R0, lambda r: 0.0, sigma, 1, t0)
    return eval_J(R, GeodesicState(0.0, 1.0, t, M), model)


def eval_kernel(
    state: GeodesicState, R: float, model: LTBModel, quad: QuadratureSpec = KERNEL_QUAD
) -> KernelEval:
    E, Ep, R0, R0p = _model_values(state.r, model)
    if R <= 0 or R0 <= 0:
        raise DomainError(f"need R, R0 > 0 (R={R}, R0={R0})")
    if E <= 0:
        raise DomainError(f"need E > 0, got {E}")
    M = state.M
    if E + M / R <= 0 or E + M / R0 <= 0:
        raise DomainError("E + xi <= 0 or E + xi_sharp <= 0")
    out = _kernels.kernel_core(
        E, Ep, R0, R0p, float(R), M, state.z, float(model.sigma), float(model.delta),
        quad.abs_tol, quad.rel_tol, quad.max_depth,
        _kernels.NODES, _kernels.KRONROD_W, _kernels.GAUSS_W,
    ).tolist()
    if not out[11]:
        raise QuadratureError("kernel integrals did not converge", out[2], math.nan)
    return KernelEval(
        R=float(R), R0=R0, h=R0 / R, xi=M / R, xi_sharp=M / R0,
        JR=out[0], JR0=out[1], JM=out[2], JE=out[3], F=out[4], G=out[5],
        B=out[6], A=out[7], detU=out[8], denom_geo=out[9], denom_sol=out[10],
        E=E, Eprime=Ep, R0prime=R0p, z=state.z, M=M,
    )


def u_matrix(k: KernelEval, delta: int = 1) -> np.ndarray:
    """Matrix U with U X' = Y, rows: redshift relation, null condition, chain rule.

    The null-condition row is the form multiplied through by (1 + z), so its
    determinant coincides with the product formula ``KernelEval.detU``.
    """
    R, M, w = k.R, k.M, math.sqrt(1.0 + 2.0 * k.E)
    return np.array(
        [
            [k.Eprime - M * k.F / R**2, 0.0, 1.0 / R - M * k.G / R**2],
            [delta * k.B * k.F, k.B * w, delta * k.B * k.G],
            [k.F, k.B, k.G],
        ]
    )


def y_vector(k: KernelEval, R_z: float) -> np.ndarray:
    return np.array([k.A, 0.0, R_z])


def _rhs_from_kernel(k: KernelEval, R_z: float, delta: int, threshold: float) -> np.ndarray:
    w = math.sqrt(1.0 + 2.0 * k.E)
    R, M = k.R, k.M
    if abs(k.denom_geo) < threshold * (1.0 + abs(R_z)):
        kind = "horizon" if abs(2.0 * M - R) <= 1e-8 * (1.0 + R) else "geometric_denominator"
        raise SingularityError(kind, k.z, {"denom_geo": k.denom_geo, "R_z": R_z, "2M-R": 2 * M - R})
    if abs(k.denom_sol) < threshold * (1.0 + abs(k.F) + abs(k.G * k.Eprime * R)):
        raise SingularityError("tangency", k.z, {"denom_sol": k.denom_sol, "F": k.F, "G": k.G})
    dg, ds = k.denom_geo, k.denom_sol
    dt = delta * R_z / dg
    dr = k.G * k.A * R / ds - R_z * (M * k.G - R) * w / (R * dg * ds)
    dM = -k.F * R * k.A / ds - R_z * (R * R * k.Eprime - k.F * M) * w / (R * dg * ds)
    return np.array([dr, dt, dM])


def assemble_rhs(
    state: GeodesicState,
    curve: Curve,
    model: LTBModel,
    threshold: float = DENOM_THRESHOLD,
    kernel: KernelEval | None = None,
) -> np.ndarray:
    """(dr/dz, dt/dz, dM/dz) of the general system at ``state``."""
    R = float(curve.R(state.z))
    R_z = float(curve.dRdz(state.z))
    k = kernel or eval_kernel(state, R, model)
    return _rhs_from_kernel(k, R_z, model.delta, threshold)


def null_identity_residual(k: KernelEval, rhs: np.ndarray, delta: int = 1) -> float:
    """(1+z) A t' + delta B (F r' + G M'), relative to the largest single term."""
    dr, dt, dM = rhs
    lhs = (1.0 + k.z) * k.A * dt
    right = -delta * k.B * (k.F * dr + k.G * dM)
    scale = max(abs(lhs), abs(k.B * k.F * dr), abs(k.B * k.G * dM), 1e-300)
    return abs(lhs - right) / scale


def chain_rule_residual(k: KernelEval, rhs: np.ndarray, R_z: float) -> float:
    """F r' + G M' + B t' - R_z, relative to |R_z| + the largest term."""
    dr, dt, dM = rhs
    terms = (k.F * dr, k.G * dM, k.B * dt)
    return abs(sum(terms) - R_z) / max(abs(R_z) + max(map(abs, terms)), 1e-300)


def check_local_solvability(state: GeodesicState, R: float, model: LTBModel) -> tuple[bool, dict[str, float]]:
    """Sufficient conditions for the tangency denominator to be nonzero."""
    E, Ep, R0, R0p = _model_values(state.r, model)
    M = state.M
    cond1 = bool(np.sign(Ep) != np.sign(R0p))
    if M > 0:
        lhs = abs(Ep * (R0 - R) ** 2 / (2.0 * M * math.sqrt(27.0 * E)))
    else:
        lhs = 0.0 if Ep == 0 or R0 == R else math.inf
    rhs = abs(R0p * math.sqrt(R0) / math.sqrt(E * R0 + M))
    cond2 = bool(lhs < rhs)
    pre = model.delta != model.sigma or 2.0 * M != R
    diag = {
        "condition1": float(cond1),
        "condition2": float(cond2),
        "lhs": lhs,
        "rhs": rhs,
        "precondition": float(pre),
    }
    return cond1 or cond2, diag


def _safe(fn):
    def wrapped(z, y):
        try:
            return float(fn(z, y))
        except (ArithmeticError, ValueError, FloatingPointError):
            return math.nan

    return wrapped


def singularity_events(curve: Curve, model: LTBModel, terminal: bool = True, tol: float = 1e-10) -> list[EventSpec]:
    """Events on 2M - R, the tangency denominator, and R_z.

    ``terminal`` applies to the genuine singularities (horizon, tangency);
    R_z = 0 alone is a regular point of the general system and is only recorded.
    """

    def horizon(z, y):
        return 2.0 * y[2] - curve.R(z)

    def tangency(z, y):
        return eval_kernel(GeodesicState.from_array(z, y), curve.R(z), model).denom_sol

    def critical(z, y):
        return curve.dRdz(z)

    horizon_terminal = terminal and model.sigma == model.delta
    return [
        EventSpec(_safe(horizon), "any", horizon_terminal, tol, "horizon"),
        EventSpec(_safe(tangency), "any", terminal, tol, "tangency"),
        EventSpec(_safe(critical), "any", False, tol, "critical_redshift"),
    ]


def integrate_general(
    init: GeodesicState,
    curve: Curve,
    model: LTBModel,
    z1: float,
    spec: IvpSpec | None = None,
    events: Sequence[EventSpec] | None = None,
) -> Trajectory:
    """Integrate the general system from ``init`` to ``z1``.

    With ``events=None`` the default singularity events are watched. A run
    whose steps collapse onto the horizon without crossing it is closed with
    a terminal horizon event.
    """

    def rhs(z, y):
        return assemble_rhs(GeodesicState.from_array(z, y), curve, model)

    if events is not None:
        return solve_ivp(rhs, init.as_array(), init.z, z1, spec, events)
    try:
        return solve_ivp(rhs, init.as_array(), init.z, z1, spec, singularity_events(curve, model))
    except StepUnderflowError as exc:
        traj = exc.trajectory
        if traj is None or model.sigma != model.delta:
            raise
        R = curve.R(exc.z)
        # the flow runs into the pole of M' and 2M - R only tends to zero
        if abs(2.0 * exc.y[2] - R) > HORIZON_SNAP * R:
            raise
        traj.events.append(EventRecord("horizon", 0, exc.z, exc.y.copy(), True))
        traj.status = "terminal_event"
        return traj


def _sign_change_near(fn, z: float, tol: float) -> bool:
    try:
        a, b = fn(z - tol), fn(z + tol)
    except (ArithmeticError, ValueError):
        return False
    return a == 0.0 or b == 0.0 or (a < 0.0) != (b < 0.0)


def classify_singularity(
    trajectory: Trajectory, model: LTBModel, curve: Curve, tol: float = 1e-6
) -> list[SingularityReport]:
    """Classify the recorded events of a run.

    A horizon and an R_z zero within ``tol`` of each other are flagged as
    possibly removable (the 0/0 case of dt/dz).
    """
    reports: list[SingularityReport] = []
    horizons = [e for e in trajectory.events if e.name == "horizon"]
    criticals = [e for e in trajectory.events if e.name == "critical_redshift"]

    def rz_zero_near(z):
        if any(abs(c.z - z) <= tol for c in criticals):
            return True
        return _sign_change_near(curve.dRdz, z, tol)

    def horizon_near(z):
        if any(abs(h.z - z) <= tol for h in horizons):
            return True
        state = trajectory(z)
        m_z = state[2]
        m_dot = trajectory.derivative(z)[2]

        def gap(zz):
            return 2.0 * (m_z + m_dot * (zz - z)) - curve.R(zz)

        return _sign_change_near(gap, z, tol)

    for ev in trajectory.events:
        R = float(curve.R(ev.z))
        diag = {"R": R, "2M-R": 2.0 * ev.y[2] - R, "R_z": float(curve.dRdz(ev.z))}
        if ev.name == "horizon":
            if model.sigma != model.delta:
                continue
            reports.append(SingularityReport("horizon", ev.z, diag, rz_zero_near(ev.z)))
        elif ev.name == "tangency":
            reports.append(SingularityReport("tangency", ev.z, diag, False))
        elif ev.name == "critical_redshift":
            reports.append(SingularityReport("critical_redshift", ev.z, diag, horizon_near(ev.z)))
    return reports


__all__ = [
    "Curve",
    "GeodesicState",
    "KernelEval",
    "LTBModel",
    "SingularityReport",
    "assemble_rhs",
    "chain_rule_residual",
    "check_local_solvability",
    "classify_singularity",
    "eval_J",
    "eval_kernel",
    "integrate_general",
    "j_value",
    "null_identity_residual",
    "singularity_events",
    "u_matrix",
    "y_vector",
]
