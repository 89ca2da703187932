"""Unit-energy specialization (E = 1, sigma = delta = 1) in the variable xi = M/R.

With Delta = sqrt(3) - sqrt(2 + 2 xi) the system reads::

    dr/dz  = R J1 sqrt(6) sqrt(1+xi)/(1+z) + sqrt(3) R_z (J2 + xi J1) / Delta
    dt/dz  = -R_z / Delta
    dxi/dz = sqrt(6) sqrt(1+xi)/(1+z) + xi (R_z/R) kappa sqrt(1+xi) / Delta

where J1 = -G/F and J2 = 1/F from the kernel. The xi equation is autonomous
in (z, xi). Its coefficient ``kappa`` is sqrt(3) in the ``sqrt3`` variant,
which the bound certificates below assume, and sqrt(2) in the ``sqrt2``
variant, which is what eliminating M from the general system gives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .certificates import BoundCertificate
from .exceptions import DomainError, SingularityError, StepUnderflowError, StraddleError
from .kernel import Curve, LTBModel
from .numerics import EventRecord, EventSpec, IvpSpec, Trajectory, find_root_bracketed, solve_ivp

SQRT2, SQRT3, SQRT6 = math.sqrt(2.0), math.sqrt(3.0), math.sqrt(6.0)
RHO = math.sqrt(1.5)
EPSILON = 1e-6
VARIANTS = {"sqrt3": SQRT3, "sqrt2": SQRT2}
N_CERT_SAMPLES = 1000
# relative slack for bounds that hold with equality by construction
ROUNDOFF = 1e-12
_QUAD = (1e-15, 1e-13, 60)


@dataclass(frozen=True)
class DecoupledState:
    z: float
    r: float
    t: float
    xi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.t, self.xi])


@dataclass(frozen=True)
class LipschitzBox:
    xi_star: float
    epsilon: float
    rho_min: float
    rho_max: float
    lam: float
    h_star: float
    r_frak: float
    M1: float = field(init=False)
    M2: float = field(init=False)
    M3: float = field(init=False)
    M: float = field(init=False)

    def __post_init__(self):
        vals = (self.xi_star, self.epsilon, self.rho_min, self.rho_max, self.lam, self.h_star, self.r_frak)
        if not all(v > 0 for v in vals):
            raise ValueError("all box inputs must be positive")
        m1 = self.lam * (SQRT3 + math.sqrt(2.0 + 2.0 * self.xi_star)) / self.epsilon
        sh = math.sqrt(self.h_star)
        m2 = SQRT3 * (self.rho_max * math.sqrt(self.h_star / 2.0) + (1.0 + sh / 2.0) * m1) / self.r_frak
        m3 = math.sqrt(3.0 * (1.0 + self.xi_star)) * (SQRT2 + m1 * self.xi_star / self.rho_min)
        object.__setattr__(self, "M1", m1)
        object.__setattr__(self, "M2", m2)
        object.__setattr__(self, "M3", m3)
        object.__setattr__(self, "M", max(m1, m2, m3))


@dataclass(frozen=True)
class PicardBox:
    M: float
    b: float
    interval: tuple[float, float]
    box: LipschitzBox


@dataclass(frozen=True)
class JEstimates:
    J1: float
    J2: float
    J1_chain: tuple[float, float]
    J2_bound: float
    combo_bound: float
    h: float


@dataclass(frozen=True)
class UpperBoundCheck:
    C: float
    C_remark: float
    sign: int
    kind: str
    interval: tuple[float, float]


def delta_xi(xi: float) -> float:
    return SQRT3 - math.sqrt(2.0 + 2.0 * xi)


def k_xi(xi: float) -> float:
    """K_xi = -sqrt(3) sqrt(1+xi) / Delta_xi; decreases to sqrt(3/2) for xi > 1/2."""
    return -SQRT3 * math.sqrt(1.0 + xi) / delta_xi(xi)


def _check_unit(model: LTBModel, r: float) -> None:
    if model.sigma != 1 or model.delta != 1:
        raise ValueError("the unit-energy system assumes sigma = delta = 1")
    if model.E(r) != 1.0 or model.Eprime(r) != 0.0:
        raise ValueError("the unit-energy system assumes E = 1")


def _band(xi: float, eps: float, z: float) -> None:
    if xi < 0:
        raise DomainError(f"xi must be non-negative, got {xi}")
    if abs(2.0 * xi - 1.0) < eps:
        raise SingularityError("exclusion_band", z, {"xi": xi, "Delta": delta_xi(xi)})


def _j1_j2(r: float, z: float, xi: float, R: float, model: LTBModel) -> tuple[float, float, float, float]:
    R0, R0p = float(model.R0(r)), float(model.R0prime(r))
    if R0 <= 0 or R0p == 0:
        raise DomainError("need R0 > 0 and R0' != 0")
    h = R0 / R
    xs = xi / h
    val, _, _ = _kernels.gk_integrate(_kernels.POWER, 1.0, h, 1.0, xi, 0.5, *_QUAD)
    j1 = math.sqrt(1.0 + xs) / (2.0 * R0p) * val
    j2 = math.sqrt((1.0 + xs) / (1.0 + xi)) / R0p
    return j1, j2, h, R0p


def eval_J1_J2(state: DecoupledState, curve: Curve, model: LTBModel) -> JEstimates:
    """J1 = -G/F and J2 = 1/F with the chain of upper bounds for each.

    ``J1_chain`` holds the two successive upper bounds for J1, each to be
    compared with the previous link.
    """
    R = float(curve.R(state.z))
    j1, j2, h, R0p = _j1_j2(state.r, state.z, state.xi, R, model)
    if h < 1.0:
        raise DomainError(f"estimates need h >= 1, got h={h}")
    if R0p <= 0:
        raise DomainError("estimates need R0' > 0")
    xi, xs = state.xi, state.xi / h
    link1 = math.sqrt(h * (1.0 + xs)) / R0p * (1.0 / math.sqrt(1.0 + xi) - 1.0 / math.sqrt(h + xi))
    link2 = math.sqrt(h) / (2.0 * R0p * (1.0 + xi))
    return JEstimates(j1, j2, (link1, link2), 1.0 / R0p, (1.0 + math.sqrt(h) / 2.0) / R0p, h)


def xi_rhs(z: float, xi: float, R: float, R_z: float, variant: str = "sqrt3", eps: float = EPSILON) -> float:
    kappa = VARIANTS[variant]
    _band(xi, eps, z)
    s = math.sqrt(1.0 + xi)
    return SQRT6 * s / (1.0 + z) + xi * (R_z / R) * kappa * s / delta_xi(xi)


def rhs_decoupled(
    state: DecoupledState,
    curve: Curve,
    model: LTBModel,
    variant: str = "sqrt3",
    eps: float = EPSILON,
) -> np.ndarray:
    """(dr/dz, dt/dz, dxi/dz) of the unit-energy system."""
    z, xi = state.z, state.xi
    _band(xi, eps, z)
    R, R_z = float(curve.R(z)), float(curve.dRdz(z))
    if R <= 0:
        raise DomainError("R must be positive")
    j1, j2, _, _ = _j1_j2(state.r, z, xi, R, model)
    d = delta_xi(xi)
    a = SQRT6 * math.sqrt(1.0 + xi) / (1.0 + z)
    dr = R * j1 * a + SQRT3 * R_z * (j2 + xi * j1) / d
    dt = -R_z / d
    return np.array([dr, dt, xi_rhs(z, xi, R, R_z, variant, eps)])


def initial_state(curve: Curve, model: LTBModel, z0: float, xi0: float) -> DecoupledState:
    """State on the t0 slice: R0(r0) = R[z0], t = t0."""
    R = float(curve.R(z0))
    c = model.params.get("c") if model.params else None
    if c:
        r0 = R / c
    else:
        hi = 1.0
        while model.R0(hi) < R:
            hi *= 2.0
        r0 = find_root_bracketed(lambda r: model.R0(r) - R, 0.0, hi, 1e-14)
    return DecoupledState(float(z0), r0, model.t0, float(xi0))


def unit_model(c: float = 1.0, t0: float = 0.0) -> LTBModel:
    """E = 1, R0 = c r."""
    return LTBModel.power_law(1.0, 0.0, c, t0)


@dataclass
class DecoupledRun:
    """xi(z) from the scalar equation, then (r, t) driven by it."""

    xi: Trajectory
    rt: Trajectory | None
    curve: Curve
    model: LTBModel
    init: DecoupledState
    variant: str

    @property
    def z_start(self) -> float:
        return self.xi.z_start

    @property
    def z_end(self) -> float:
        return self.xi.z_end

    @property
    def rt_z_end(self) -> float:
        return self.rt.z_end if self.rt is not None else self.z_start

    @property
    def status(self) -> str:
        return self.xi.status

    @property
    def events(self):
        return self.xi.events

    def xi_at(self, z):
        v = self.xi(z)
        return v[..., 0]

    def __call__(self, z) -> np.ndarray:
        """(r, t, xi) at z."""
        if self.rt is None:
            raise ValueError("run was solved for xi only")
        rt = self.rt(z)
        xi = self.xi_at(z)
        return np.column_stack([rt, xi]) if np.ndim(z) else np.array([rt[0], rt[1], xi])

    def grid(self, n: int = N_CERT_SAMPLES, with_rt: bool = False) -> np.ndarray:
        return np.linspace(self.z_start, self.rt_z_end if with_rt else self.z_end, n)

    def mass(self, z) -> np.ndarray:
        zs = np.atleast_1d(z)
        return self.xi_at(zs) * np.array([self.curve.R(v) for v in zs])


def band_event(eps: float = EPSILON) -> EventSpec:
    return EventSpec(lambda z, y: abs(2.0 * y[-1] - 1.0) - eps, "falling", True, 1e-12, "exclusion_band")


def _solve_banded(rhs, y0, z0, z1, spec, eps) -> Trajectory:
    """solve_ivp that turns a step collapse against the xi = 1/2 band into a terminal event.

    Near the band dxi/dz grows like an inverse square root, so the steps
    shrink before an accepted step can straddle |2 xi - 1| = eps.
    """
    try:
        return solve_ivp(rhs, y0, z0, z1, spec, [band_event(eps)])
    except StepUnderflowError as exc:
        if "exclusion_band" not in exc.cause or exc.trajectory is None:
            raise
        traj = exc.trajectory
        traj.events.append(EventRecord("exclusion_band", 0, exc.z, exc.y.copy(), True))
        traj.status = "terminal_event"
        return traj


def solve_decoupled(
    init: DecoupledState,
    curve: Curve,
    model: LTBModel,
    z1: float,
    spec: IvpSpec | None = None,
    variant: str = "sqrt3",
    eps: float = EPSILON,
    xi_only: bool = False,
) -> DecoupledRun:
    spec = spec or IvpSpec(rel_tol=1e-11, abs_tol=1e-13)
    _check_unit(model, init.r)
    _band(init.xi, eps, init.z)

    def f_xi(z, y):
        return np.array([xi_rhs(z, y[0], curve.R(z), curve.dRdz(z), variant, eps)])

    xi_traj = _solve_banded(f_xi, [init.xi], init.z, z1, spec, eps)
    if xi_only:
        return DecoupledRun(xi_traj, None, curve, model, init, variant)

    def f_rt(z, y):
        xi = float(xi_traj(z)[0])
        return rhs_decoupled(DecoupledState(z, y[0], y[1], xi), curve, model, variant, eps)[:2]

    try:
        rt_traj = solve_ivp(f_rt, [init.r, init.t], init.z, xi_traj.z_end, spec)
    except StepUnderflowError as exc:
        # (r, t) can leave the model domain (R0(r) <= 0) before xi does
        if exc.trajectory is None or len(exc.trajectory.z) < 2:
            raise
        rt_traj = exc.trajectory
    return DecoupledRun(xi_traj, rt_traj, curve, model, init, variant)


def solve_coupled(
    init: DecoupledState,
    curve: Curve,
    model: LTBModel,
    z1: float,
    spec: IvpSpec | None = None,
    variant: str = "sqrt3",
    eps: float = EPSILON,
) -> Trajectory:
    """The three equations integrated together, for cross-checking."""
    spec = spec or IvpSpec(rel_tol=1e-11, abs_tol=1e-13)
    _check_unit(model, init.r)

    def f(z, y):
        return rhs_decoupled(DecoupledState(z, y[0], y[1], y[2]), curve, model, variant, eps)

    return _solve_banded(f, init.as_array(), init.z, z1, spec, eps)


# --------------------------------------------------------------------------
# successive approximations


def picard_box(init: DecoupledState, bounds: LipschitzBox, z1: float | None = None, fraction: float = 0.5) -> PicardBox:
    """Box radius b = fraction/M < 1/M and the interval of guaranteed existence."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    if not init.xi < bounds.xi_star:
        raise ValueError("need xi0 < xi*")
    if abs(2.0 * init.xi - 1.0) < bounds.epsilon:
        raise ValueError("xi0 violates the exclusion band")
    b = fraction / bounds.M
    length = b / bounds.M
    if z1 is not None:
        length = min(length, z1 - init.z)
    return PicardBox(bounds.M, b, (init.z, init.z + length), bounds)


def lipschitz_box_for(
    init: DecoupledState,
    curve: Curve,
    model: LTBModel,
    z1: float,
    pad: float = 0.5,
    n: int = 200,
) -> LipschitzBox:
    """Box constants from the data on [z0, z1], padded around the initial state."""
    zs = np.linspace(init.z, z1, n)
    Rs = np.array([curve.R(z) for z in zs])
    Rz = np.array([curve.dRdz(z) for z in zs])
    xi_star = init.xi + pad
    lo, hi = init.xi - pad, init.xi + pad
    if lo < 0.5 < hi:
        raise ValueError("padding reaches xi = 1/2")
    eps = min(abs(2 * lo - 1), abs(2 * hi - 1))
    r_max = init.r + pad
    R0_max = max(model.R0(init.r), model.R0(r_max))
    r_frak = min(abs(model.R0prime(init.r)), abs(model.R0prime(r_max)))
    return LipschitzBox(
        xi_star=xi_star,
        epsilon=eps,
        rho_min=float(Rs.min()),
        rho_max=float(Rs.max()),
        lam=float(np.abs(Rz).max()),
        h_star=max(float(R0_max / Rs.min()), 1.0 + 1e-12),
        r_frak=r_frak,
    )


@dataclass
class PicardResult:
    z: np.ndarray
    X: np.ndarray
    iterations: int
    increments: list[float]
    converged: bool


def _cumulative_simpson(f: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Cumulative integral on a uniform grid with an even number of panels."""
    h = z[1] - z[0]
    out = np.zeros_like(f)
    # pairs of panels by Simpson, odd nodes by the third-order half-panel rule
    for i in range(1, len(z)):
        if i % 2 == 0:
            out[i] = out[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i])
        else:
            lo = max(i - 1, 0)
            if i + 1 < len(z):
                out[i] = out[lo] + h / 12.0 * (5.0 * f[lo] + 8.0 * f[i] - f[i + 1])
            else:
                out[i] = out[lo] + h / 12.0 * (-f[i - 2] + 8.0 * f[lo] + 5.0 * f[i])
    return out


def picard_iterate(
    init: DecoupledState,
    curve: Curve,
    model: LTBModel,
    interval: tuple[float, float],
    n_grid: int = 401,
    max_iter: int = 30,
    tol: float = 1e-12,
    variant: str = "sqrt3",
) -> PicardResult:
    """X_{k+1}(z) = X0 + int_{z0}^{z} f(s, X_k(s)) ds on a uniform grid."""
    if n_grid % 2 == 0:
        n_grid += 1
    z = np.linspace(interval[0], interval[1], n_grid)
    x0 = init.as_array()
    X = np.tile(x0, (n_grid, 1))
    incs: list[float] = []
    for k in range(1, max_iter + 1):
        F = np.array([rhs_decoupled(DecoupledState(zz, *row), curve, model, variant) for zz, row in zip(z, X)])
        X_new = x0 + np.column_stack([_cumulative_simpson(F[:, j], z) for j in range(3)])
        inc = float(np.max(np.abs(X_new - X)))
        incs.append(inc)
        X = X_new
        if inc <= tol:
            return PicardResult(z, X, k, incs, True)
    return PicardResult(z, X, max_iter, incs, False)


# --------------------------------------------------------------------------
# certificates


def check_upprbnd(curve: Curve, interval: tuple[float, float], n: int = N_CERT_SAMPLES) -> UpperBoundCheck:
    """inf R/(z|R_z|) and inf z|R_z|/R on the interval, with the sign of R_z.

    A left endpoint of 0 is treated as open.
    """
    lo, hi = map(float, interval)
    if not 0 <= lo < hi:
        raise ValueError("interval must satisfy 0 <= lo < hi")
    zs = np.linspace(lo, hi, n + 1)[1:] if lo == 0 else np.linspace(lo, hi, n)
    R = np.array([curve.R(z) for z in zs])
    Rz = np.array([curve.dRdz(z) for z in zs])
    signs = np.sign(Rz)
    if np.any(signs == 0) or np.any(signs != signs[0]):
        raise StraddleError(f"R_z changes sign on [{lo}, {hi}]: straddles z_Lambda")
    ratio = zs * np.abs(Rz) / R
    sign = int(signs[0])
    return UpperBoundCheck(float(np.min(1.0 / ratio)), float(np.min(ratio)), sign, "I+" if sign > 0 else "I-", (lo, hi))


def _rel_margin(bound: np.ndarray, value: np.ndarray, upper: bool) -> np.ndarray:
    diff = bound - value if upper else value - bound
    scale = np.maximum(np.abs(bound), 1e-300)
    return diff / scale + ROUNDOFF


def verify_thm1(run: DecoupledRun, C: float, n: int = N_CERT_SAMPLES) -> BoundCertificate:
    """M <= c R with c = max(xi0, C/(2C+1)) (case 1) or max(xi0, C/(2C-1)) (case 2)."""
    zs = run.grid(n)
    interval = (run.z_start, run.z_end)
    curve = run.curve
    R = np.array([curve.R(z) for z in zs])
    Rz = np.array([curve.dRdz(z) for z in zs])
    xi0 = run.init.xi
    consts = {"C": C, "xi0": xi0}
    # C is typically the infimum over this same grid, so allow equality to roundoff
    upp = R - C * zs * np.abs(Rz)
    if np.any(upp < -ROUNDOFF * R):
        return BoundCertificate.not_applicable("thm1_case1", "R > C z |R_z| fails on the interval", interval, consts)
    if 0 < xi0 < 0.5 and np.all(Rz < 0):
        claim, star = "thm1_case1", C / (2.0 * C + 1.0)
    elif xi0 > 0.5 and np.all(Rz > 0):
        claim = "thm1_case2"
        if C <= 0.5:
            consts["xi_star"] = C / (2.0 * C - 1.0) if C != 0.5 else math.inf
            return BoundCertificate.not_applicable(claim, "C/(2C-1) is not positive for C <= 1/2", interval, consts)
        star = C / (2.0 * C - 1.0)
    else:
        reason = "case hypotheses fail (case 1: 0<xi0<1/2, R_z<0; case 2: xi0>1/2, R_z>0)"
        return BoundCertificate.not_applicable("thm1_case1", reason, interval, consts)
    c = max(xi0, star)
    consts.update({"xi_star": star, "c": c})
    M = run.mass(zs)
    notes = []
    if claim == "thm1_case1" and not c < 0.5:
        notes.append("c1 >= 1/2")
    if claim == "thm1_case2" and not c > 0.5:
        notes.append("c2 <= 1/2")
    return BoundCertificate.from_margins(claim, consts, interval, _rel_margin(c * R, M, True), notes)


@dataclass(frozen=True)
class Thm2Bounds:
    rho: float
    rho0: float
    q0: float
    c3: float
    c4: float
    R0: float
    z0: float

    def lower(self, z, R):
        return self.c3 * (R ** (1.0 - self.rho) + R * np.log((1.0 + z) / (1.0 + self.z0)))

    def upper(self, z, R):
        """Claimed form: c4 ((1 + ln(1+z)) / R^(rho - 1/2))^2."""
        return self.c4 * ((1.0 + np.log1p(z)) / R ** (self.rho - 0.5)) ** 2

    def upper_proof(self, z, R):
        """Form reached by the argument before R is traded for R^rho."""
        return self.q0 * self.R0 ** (2 * self.rho0) * R ** (1.0 - 2 * self.rho0) * (1.0 + SQRT6 * np.log1p(z)) ** 2


def thm2_bounds(xi0: float, R0: float, z0: float) -> Thm2Bounds:
    rho0 = k_xi(xi0)
    q0 = (xi0 + 1.0) / xi0
    c3 = min(xi0 * R0**RHO, SQRT6 * math.sqrt(1.0 + xi0))
    c4 = 6.0 * q0 * R0 ** (2.0 * rho0)
    return Thm2Bounds(RHO, rho0, q0, c3, c4, R0, z0)


def _thm2_pre(run: DecoupledRun, zs: np.ndarray, Rz: np.ndarray) -> str | None:
    if run.model.sigma != 1 or run.model.delta != 1:
        return "needs sigma = delta = 1"
    if not run.init.xi > 0.5:
        return "needs xi0 > 1/2"
    if np.any(Rz >= 0):
        return "needs R_z < 0 on the interval"
    return None


def verify_thm2(run: DecoupledRun, scale: float = 1.0, n: int = N_CERT_SAMPLES) -> BoundCertificate:
    """Lower and upper bounds on M[z]; ``scale`` multiplies R (and hence M).

    The xi equation only sees R_z/R, so scaling the data leaves xi unchanged.
    The margin of the upper bound in the form the argument actually proves is
    reported separately as ``proof_form_margin``.
    """
    zs = run.grid(n)
    interval = (run.z_start, run.z_end)
    R = scale * np.array([run.curve.R(z) for z in zs])
    Rz = np.array([run.curve.dRdz(z) for z in zs])
    reason = _thm2_pre(run, zs, Rz)
    if reason:
        return BoundCertificate.not_applicable("thm2", reason, interval)
    b = thm2_bounds(run.init.xi, R[0], zs[0])
    M = run.xi_at(zs) * R
    lower_m = _rel_margin(b.lower(zs, R), M, False)
    upper_m = _rel_margin(b.upper(zs, R), M, True)
    proof_m = _rel_margin(b.upper_proof(zs, R), M, True)
    consts = {
        "rho": b.rho,
        "rho0": b.rho0,
        "q0": b.q0,
        "c3": b.c3,
        "c4": b.c4,
        "scale": scale,
        "lower_margin": float(lower_m.min()),
        "upper_margin": float(upper_m.min()),
        "proof_form_margin": float(proof_m.min()),
    }
    return BoundCertificate.from_margins("thm2", consts, interval, np.minimum(lower_m, upper_m))


def _k_alpha(zs: np.ndarray, alpha: float) -> float:
    return float(np.max((1.0 + np.log1p(zs)) ** 2 * zs ** (-alpha)))


def verify_growth_corollary(
    run: DecoupledRun,
    alpha: float,
    fit_range: tuple[float, float] = (10.0, 50.0),
    scale: float = 1.0,
    n: int = N_CERT_SAMPLES,
) -> BoundCertificate:
    """k1 z^(rho-1) <= M <= k2 z^(2 rho - 1 + alpha), plus the fitted log-log slope of M."""
    zs = run.grid(n)
    interval = (run.z_start, run.z_end)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    curve = run.curve
    omega = getattr(curve, "omega", None)
    R = scale * np.array([curve.R(z) for z in zs])
    Rz = np.array([curve.dRdz(z) for z in zs])
    if omega is None or not 0 <= omega < 1:
        return BoundCertificate.not_applicable("growth_corollary", "needs 0 <= Omega_Lambda < 1", interval)
    if not run.init.xi > 2.0:
        return BoundCertificate.not_applicable("growth_corollary", "needs M0 > 2 R[z0]", interval)
    if np.any(Rz >= 0):
        return BoundCertificate.not_applicable("growth_corollary", "needs z0 > z_Lambda", interval)
    reason = _thm2_pre(run, zs, Rz)
    if reason:
        return BoundCertificate.not_applicable("growth_corollary", reason, interval)
    zR = zs * R
    C1, C2 = float(zR.min()), float(zR.max())
    b = thm2_bounds(run.init.xi, R[0], zs[0])
    k1 = b.c3 * C2 ** (1.0 - RHO)
    k2 = b.c4 * C1 ** (1.0 - 2.0 * RHO) * _k_alpha(zs, alpha)
    M = run.xi_at(zs) * R
    low = _rel_margin(k1 * zs ** (RHO - 1.0), M, False)
    up = _rel_margin(k2 * zs ** (2.0 * RHO - 1.0 + alpha), M, True)
    mask = (zs >= fit_range[0]) & (zs <= fit_range[1])
    slope = float(np.polyfit(np.log(zs[mask]), np.log(M[mask]), 1)[0]) if mask.sum() >= 2 else math.nan
    consts = {
        "C1": C1,
        "C2": C2,
        "k1": k1,
        "k2": k2,
        "alpha": alpha,
        "fitted_slope": slope,
        "slope_lo": RHO - 1.0,
        "slope_hi": 2.0 * RHO - 1.0 + alpha,
        "lower_margin": float(low.min()),
        "upper_margin": float(up.min()),
    }
    return BoundCertificate.from_margins("growth_corollary", consts, interval, np.minimum(low, up))


def verify_monotonicity(run: DecoupledRun, n: int = N_CERT_SAMPLES) -> BoundCertificate:
    """r strictly increasing and t strictly decreasing along the run."""
    zs = run.grid(n, with_rt=True)
    interval = (run.z_start, run.rt_z_end)
    if run.rt is None:
        return BoundCertificate.not_applicable("monotonicity_corollary", "run has no (r, t) solution", interval)
    d = run.rt.derivative(zs)
    dr, dt = d[:, 0], d[:, 1]
    margins = np.minimum(dr / (np.abs(dr).max() or 1.0), -dt / (np.abs(dt).max() or 1.0))
    consts = {"min_dr": float(dr.min()), "max_dt": float(dt.max())}
    return BoundCertificate.from_margins("monotonicity_corollary", consts, interval, margins)


def verify_picard_box(result: PicardResult, box: PicardBox, x0: Sequence[float]) -> BoundCertificate:
    """Every iterate stays in the box |X - X0| <= b and the iteration converged."""
    dev = float(np.max(np.abs(result.X - np.asarray(x0))))
    margins = [(box.b - dev) / box.b, 1.0 if result.converged else -1.0]
    consts = {"M": box.M, "b": box.b, "max_deviation": dev, "iterations": float(result.iterations)}
    return BoundCertificate.from_margins("prop6_box", consts, box.interval, margins)


def estimate_chain_report(run: DecoupledRun, n: int = 200) -> dict[str, float]:
    """Worst margin of each link of the J estimates along a run (negative = violated)."""
    if run.rt is None:
        raise ValueError("run has no (r, t) solution")
    worst = dict.fromkeys(("J1>=0", "J1<=link1", "link1<=link2", "J1<=link2", "J2<=1/R0'", "J2+xiJ1<=bound"), math.inf)
    for z in run.grid(n, with_rt=True):
        r, t, xi = run(z)
        est = eval_J1_J2(DecoupledState(z, r, t, xi), run.curve, run.model)
        l1, l2 = est.J1_chain
        scale = max(abs(est.J1), abs(l1), abs(l2), 1e-300)
        checks = {
            "J1>=0": est.J1 / scale,
            "J1<=link1": (l1 - est.J1) / scale,
            "link1<=link2": (l2 - l1) / scale,
            "J1<=link2": (l2 - est.J1) / scale,
            "J2<=1/R0'": (est.J2_bound - est.J2) / est.J2_bound,
            "J2+xiJ1<=bound": (est.combo_bound - est.J2 - xi * est.J1) / est.combo_bound,
        }
        for k, v in checks.items():
            worst[k] = min(worst[k], v)
    return worst
