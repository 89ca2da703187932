"""Generic numerical machinery: adaptive quadrature, bracketed roots, and an
embedded Runge-Kutta 5(4) integrator with dense output and event location.

All functions are pure given their inputs.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from ._kernels import GAUSS_W, KRONROD_W, NODES
from .exceptions import (
    BracketError,
    DomainError,
    LtbMapError,
    QuadratureError,
    SingularityError,
    StepUnderflowError,
)

ScalarFn = Callable[[float], float]
VectorField = Callable[[float, np.ndarray], np.ndarray]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-14
    rel_tol: float = 1e-10
    max_depth: int = 60

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if not self.rel_tol >= 0:
            raise ValueError("rel_tol must be non-negative")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")


@dataclass(frozen=True)
class IvpSpec:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    initial_step: float = 1e-3
    min_step: float = 1e-14
    max_step: float = 1.0
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.min_step <= self.initial_step <= self.max_step):
            raise ValueError("need 0 < min_step <= initial_step <= max_step")


Direction = Literal["rising", "falling", "any"]


@dataclass(frozen=True)
class EventSpec:
    """A scalar event ``g(z, y) = 0`` watched during integration."""

    function: Callable[[float, np.ndarray], float]
    direction: Direction = "any"
    terminal: bool = False
    tol: float = 1e-10
    name: str = ""

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("event tol must be positive")
        if self.direction not in ("rising", "falling", "any"):
            raise ValueError(f"unknown direction {self.direction!r}")

    def crosses(self, g0: float, g1: float) -> bool:
        if g0 == 0.0 or not (np.isfinite(g0) and np.isfinite(g1)):
            return False
        rising = g0 < 0.0 <= g1
        falling = g0 > 0.0 >= g1
        if self.direction == "rising":
            return rising
        if self.direction == "falling":
            return falling
        return rising or falling


# --------------------------------------------------------------------------
# quadrature


def _vector_eval(f: ScalarFn, x: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(f(x), dtype=float)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([f(float(v)) for v in x], dtype=float)


def _gk15(f: ScalarFn, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    fx = _vector_eval(f, 0.5 * (a + b) + half * NODES)
    kron = half * float(np.dot(KRONROD_W, fx))
    gauss = half * float(np.dot(GAUSS_W, fx))
    return kron, abs(kron - gauss)


def integrate_adaptive(
    f: ScalarFn,
    a: float,
    b: float,
    spec: QuadratureSpec | None = None,
    full_output: bool = False,
):
    """Oriented integral of ``f`` over ``[a, b]`` by globally adaptive G7-K15.

    The interval with the largest error estimate is bisected until the summed
    estimate is at most ``max(abs_tol, rel_tol * |result|)``.

    Raises:
        QuadratureError: an interval needing refinement is already at
            ``max_depth`` bisections. The best estimate is attached.
    """
    spec = spec or QuadratureSpec()
    if a == b:
        return (0.0, 0.0) if full_output else 0.0
    sign = 1.0
    lo, hi = float(a), float(b)
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0
    val, err = _gk15(f, lo, hi)
    # max-heap on error
    heap = [(-err, lo, hi, val, 0)]
    total, total_err = val, err
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        neg_err, x0, x1, v, depth = heapq.heappop(heap)
        if depth >= spec.max_depth:
            heapq.heappush(heap, (neg_err, x0, x1, v, depth))
            raise QuadratureError(
                f"tolerance not met after {spec.max_depth} bisections",
                sign * total,
                total_err,
            )
        xm = 0.5 * (x0 + x1)
        v_l, e_l = _gk15(f, x0, xm)
        v_r, e_r = _gk15(f, xm, x1)
        total += v_l + v_r - v
        total_err += e_l + e_r + neg_err
        heapq.heappush(heap, (-e_l, x0, xm, v_l, depth + 1))
        heapq.heappush(heap, (-e_r, xm, x1, v_r, depth + 1))
    # re-sum to shed the drift of incremental updates
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    if full_output:
        return sign * total, total_err
    return sign * total


# --------------------------------------------------------------------------
# roots


def find_root_bracketed(
    f: ScalarFn,
    lo: float,
    hi: float,
    tol: float = 1e-12,
    *,
    ftol: float | None = None,
    max_iter: int = 200,
) -> float:
    """Brent's method: bisection safeguarded inverse quadratic / secant steps.

    Stops when ``|f(x)| <= ftol`` (``ftol`` defaults to ``tol``) or the bracket
    width is at most ``tol``. Deterministic for fixed inputs.
    """
    ftol = tol if ftol is None else ftol
    a, b = float(lo), float(hi)
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0.0:
        raise BracketError(f"bracket invalid: f({a})={fa}, f({b})={fb}")
    c, fc = a, fa
    d = e = b - a
    for _ in range(max_iter):
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * _EPS * abs(b) + 0.5 * tol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0 or abs(fb) <= ftol:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = b, fb
        b += d if abs(d) > tol1 else math.copysign(tol1, xm)
        fb = float(f(b))
    return b


# --------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension, coefficients of theta^1..theta^4 per stage
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_RECOVERABLE = (DomainError, SingularityError, FloatingPointError, ZeroDivisionError, ValueError)


@dataclass(frozen=True)
class EventRecord:
    name: str
    index: int
    z: float
    y: np.ndarray
    terminal: bool


@dataclass
class Trajectory:
    """Accepted steps plus a piecewise quartic dense interpolant."""

    z: np.ndarray
    y: np.ndarray
    events: list[EventRecord] = field(default_factory=list)
    status: str = "completed"
    _q: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def z_start(self) -> float:
        return float(self.z[0])

    @property
    def z_end(self) -> float:
        return float(self.z[-1])

    @property
    def terminated(self) -> bool:
        return self.status == "terminal_event"

    def _segment(self, zq: float) -> int:
        zs = self.z
        if zs[-1] >= zs[0]:
            i = int(np.searchsorted(zs, zq, side="right")) - 1
        else:
            i = int(len(zs) - np.searchsorted(zs[::-1], zq, side="left")) - 1
        return min(max(i, 0), len(zs) - 2)

    def _eval(self, zq: float, deriv: bool) -> np.ndarray:
        if len(self.z) == 1:
            return np.zeros_like(self.y[0]) if deriv else self.y[0].copy()
        i = self._segment(zq)
        h = self.z[i + 1] - self.z[i]
        theta = (zq - self.z[i]) / h
        q = self._q[i]
        if deriv:
            return q @ np.array([1.0, 2 * theta, 3 * theta**2, 4 * theta**3])
        return self.y[i] + h * (q @ np.array([theta, theta**2, theta**3, theta**4]))

    def __call__(self, zq):
        """Dense state at ``zq`` (scalar) or states at each entry of an array."""
        if np.ndim(zq) == 0:
            return self._eval(float(zq), False)
        return np.array([self._eval(float(v), False) for v in np.asarray(zq)])

    def derivative(self, zq):
        if np.ndim(zq) == 0:
            return self._eval(float(zq), True)
        return np.array([self._eval(float(v), True) for v in np.asarray(zq)])

    def sample(self, n: int = 1000) -> tuple[np.ndarray, np.ndarray]:
        zs = np.linspace(self.z_start, self.z_end, n)
        return zs, self(zs)


def _rk_step(rhs, z, y, f0, h):
    k = np.empty((7, y.size))
    k[0] = f0
    for s in range(1, 6):
        k[s] = rhs(z + _C[s] * h, y + h * (_A[s] @ k[:s]))
    y1 = y + h * (_B @ k[:6])
    k[6] = rhs(z + h, y1)
    err = h * (_E @ k)
    return y1, k, err


def _checked(rhs: VectorField) -> VectorField:
    def wrapped(z, y):
        out = np.asarray(rhs(z, y), dtype=float)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError(f"non-finite right-hand side at z={z}")
        return out

    return wrapped


def solve_ivp(
    rhs: VectorField,
    y0: Sequence[float],
    z0: float,
    z1: float,
    spec: IvpSpec | None = None,
    events: Sequence[EventSpec] = (),
) -> Trajectory:
    """Integrate ``y' = rhs(z, y)`` from ``z0`` to ``z1`` (either direction).

    Steps whose stage evaluations raise a domain/singularity error are
    rejected and retried smaller. Terminal events end the run at the located
    crossing.

    Raises:
        StepUnderflowError: the step fell below ``spec.min_step``; carries the
            last accepted state and the partial trajectory.
    """
    spec = spec or IvpSpec()
    rhs = _checked(rhs)
    y = np.array(y0, dtype=float).ravel()
    z = float(z0)
    direction = 1.0 if z1 >= z0 else -1.0
    f = rhs(z, y)
    zs, ys, qs = [z], [y.copy()], []
    traj = Trajectory(z=np.array(zs), y=np.array(ys))
    if z1 == z0:
        return traj
    g_prev = [float(ev.function(z, y)) for ev in events]
    h = min(spec.initial_step, abs(z1 - z0))
    steps = 0
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        while direction * (z1 - z) > 0.0:
            steps += 1
            if steps > spec.max_steps:
                raise LtbMapError(f"max_steps={spec.max_steps} exceeded at z={z}")
            h = min(h, spec.max_step, abs(z1 - z))
            last_stretch = h == abs(z1 - z)
            try:
                y_new, k, err_vec = _rk_step(rhs, z, y, f, direction * h)
                scale = spec.abs_tol + spec.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
                err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
                failure = ""
            except _RECOVERABLE as exc:
                err = math.inf
                failure = str(exc)
            if not err <= 1.0:
                h_next = 0.25 * h if math.isinf(err) else h * max(0.2, 0.9 * err**-0.2)
                if h_next < spec.min_step:
                    traj = _assemble(zs, ys, qs, traj.events, "underflow")
                    raise StepUnderflowError(z, y, traj, failure or f"error ratio {err:.3g}")
                h = h_next
                continue
            z_new = z1 if last_stretch else z + direction * h
            q = k.T @ _P
            g_new = [float(ev.function(z_new, y_new)) for ev in events]
            hits = []
            for idx, ev in enumerate(events):
                if ev.crosses(g_prev[idx], g_new[idx]):
                    hits.append((idx, ev))
            stop = None
            if hits:
                step_h = z_new - z
                located = []
                for idx, ev in hits:
                    def g_theta(theta, ev=ev):
                        zz = z + theta * step_h
                        return ev.function(zz, y + step_h * (q @ _powers(theta)))

                    theta = find_root_bracketed(
                        g_theta, 0.0, 1.0, tol=ev.tol / abs(step_h), ftol=0.0
                    )
                    located.append((theta, idx, ev))
                located.sort(key=lambda item: item[0])
                for theta, idx, ev in located:
                    z_ev = z + theta * step_h
                    y_ev = y + step_h * (q @ _powers(theta))
                    traj.events.append(EventRecord(ev.name or f"event{idx}", idx, z_ev, y_ev, ev.terminal))
                    if ev.terminal:
                        stop = (theta, z_ev, y_ev)
                        break
            if stop is not None:
                theta, z_ev, y_ev = stop
                # truncate the last segment at the event and rescale its polynomial
                qs.append(_rescale(q, theta))
                zs.append(z_ev)
                ys.append(y_ev)
                return _assemble(zs, ys, qs, traj.events, "terminal_event")
            qs.append(q)
            z, y, f = z_new, y_new, k[6]
            zs.append(z)
            ys.append(y.copy())
            g_prev = g_new
            h = h * min(10.0, max(0.2, 0.9 * max(err, 1e-10) ** -0.2))
    return _assemble(zs, ys, qs, traj.events, "completed")


def _powers(theta: float) -> np.ndarray:
    return np.array([theta, theta**2, theta**3, theta**4])


def _rescale(q: np.ndarray, theta: float) -> np.ndarray:
    # y0 + h*sum q_j (theta*s)^j = y0 + (theta*h) * sum q_j theta^(j-1) s^j
    return q * np.array([1.0, theta, theta**2, theta**3])


def _assemble(zs, ys, qs, events, status) -> Trajectory:
    return Trajectory(z=np.array(zs), y=np.array(ys), events=list(events), status=status, _q=list(qs))
