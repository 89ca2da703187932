"""Hot inner loops: Gauss-Kronrod quadrature over the fixed integrand families.

Every integrand the ODE right-hand sides need pointwise is one of a handful of
closed forms, so they are selected by an integer code instead of a callable.
That keeps the adaptive loop compilable by numba; the same source runs
unchanged under plain numpy (see ``_accel``).

Integrand codes (parameters ``p0, p1, p2``):

* ``LUM``:    1 / sqrt(p0 + (1 - p0) x^3)                 (p0 = Omega_Lambda)
* ``POWER``:  x^p2 (p0 x + p1)^(-3/2)                     (p0 = E, p1 = xi)
* ``ROOT``:   sqrt(x / (p0 x + p1))                       (p0 = E, p1 = M)
* ``GAP``:    sqrt(x) (x - 1) (p0 x + p1)^(-3/2)          (p0 = E, p1 = xi)
"""

import numpy as np

from ._accel import jit

LUM = 0
POWER = 1
ROOT = 2
GAP = 3

_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

# Full symmetric 15-node layout; Gauss weights are zero at Kronrod-only nodes.
NODES = np.concatenate((-_XGK[:-1], _XGK[::-1]))
KRONROD_W = np.concatenate((_WGK[:-1], _WGK[::-1]))
_g = np.zeros(8)
_g[1::2] = _WG
GAUSS_W = np.concatenate((_g[:-1], _g[::-1]))
del _g


@jit
def lum_integrand(y, omega):
    return 1.0 / np.sqrt(omega + (1.0 - omega) * y * y * y)


@jit
def _integrand(code, x, p0, p1, p2):
    if code == LUM:
        return 1.0 / np.sqrt(p0 + (1.0 - p0) * x * x * x)
    if code == POWER:
        return x**p2 * (p0 * x + p1) ** -1.5
    if code == ROOT:
        return np.sqrt(x / (p0 * x + p1))
    return np.sqrt(x) * (x - 1.0) * (p0 * x + p1) ** -1.5


@jit
def _panel(code, a, b, p0, p1, p2, nodes, wk, wg):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    f = _integrand(code, mid + half * nodes, p0, p1, p2)
    kron = half * np.sum(wk * f)
    gauss = half * np.sum(wg * f)
    return kron, abs(kron - gauss)


@jit
def _gk_adaptive(code, a, b, p0, p1, p2, abs_tol, rel_tol, max_depth, nodes, wk, wg):
    """Returns (value, error_estimate, converged) for the oriented integral."""
    if a == b:
        return 0.0, 0.0, True
    sign = 1.0
    lo, hi = a, b
    if hi < lo:
        lo, hi = b, a
        sign = -1.0
    whole, whole_err = _panel(code, lo, hi, p0, p1, p2, nodes, wk, wg)
    tol = max(abs_tol, rel_tol * abs(whole))
    if whole_err <= tol:
        return sign * whole, whole_err, True
    width = hi - lo
    stack_a = np.empty(max_depth + 2)
    stack_b = np.empty(max_depth + 2)
    stack_d = np.empty(max_depth + 2, dtype=np.int64)
    top = 0
    stack_a[0] = lo
    stack_b[0] = hi
    stack_d[0] = 0
    total = 0.0
    total_err = 0.0
    converged = True
    while top >= 0:
        x0 = stack_a[top]
        x1 = stack_b[top]
        depth = stack_d[top]
        top -= 1
        val, err = _panel(code, x0, x1, p0, p1, p2, nodes, wk, wg)
        local_tol = tol * (x1 - x0) / width
        if err <= local_tol or depth >= max_depth:
            if err > local_tol:
                converged = False
            total += val
            total_err += err
            continue
        xm = 0.5 * (x0 + x1)
        top += 1
        stack_a[top] = xm
        stack_b[top] = x1
        stack_d[top] = depth + 1
        top += 1
        stack_a[top] = x0
        stack_b[top] = xm
        stack_d[top] = depth + 1
    return sign * total, total_err, converged


def gk_integrate(code, a, b, p0=0.0, p1=0.0, p2=0.0, abs_tol=1e-13, rel_tol=1e-12, max_depth=60):
    """Adaptive G7-K15 integral of a coded integrand over [a, b] (oriented)."""
    return _gk_adaptive(
        code,
        float(a),
        float(b),
        float(p0),
        float(p1),
        float(p2),
        float(abs_tol),
        float(rel_tol),
        int(max_depth),
        NODES,
        KRONROD_W,
        GAUSS_W,
    )


@jit
def kernel_core(E, Ep, R0, R0p, R, M, z, sigma, delta, abs_tol, rel_tol, max_depth, nodes, wk, wg):
    """J-partials and the derived kernel quantities at one point.

    Returns ``[JR, JR0, JM, JE, F, G, B, A, detU, denom_geo, denom_sol, ok]``
    where ``ok`` is 1.0 when both quadratures converged. Caller guarantees
    ``E + M/R > 0`` and ``E + M/R0 > 0``.
    """
    xi = M / R
    xs = M / R0
    h = R0 / R
    jr = -sigma / np.sqrt(E + xi)
    jr0 = sigma / np.sqrt(E + xs)
    im, _, ok_m = _gk_adaptive(POWER, 1.0, h, E, xi, 0.5, abs_tol, rel_tol, max_depth, nodes, wk, wg)
    ie, _, ok_e = _gk_adaptive(POWER, 1.0, h, E, xi, 1.5, abs_tol, rel_tol, max_depth, nodes, wk, wg)
    jm = -0.5 * sigma * im
    je = -0.5 * sigma * R * ie
    f = -(Ep * je + R0p * jr0) / jr
    g = -jm / jr
    root = np.sqrt(2.0 * E + 2.0 * xi)
    w = np.sqrt(1.0 + 2.0 * E)
    b = sigma * root
    a = b * w / (1.0 + z)
    det = b * (Ep * g - f / R) * (w - sigma * delta * root)
    out = np.empty(12)
    out[0] = jr
    out[1] = jr0
    out[2] = jm
    out[3] = je
    out[4] = f
    out[5] = g
    out[6] = b
    out[7] = a
    out[8] = det
    out[9] = delta * sigma * root - w
    out[10] = g * Ep * R - f
    out[11] = 1.0 if (ok_m and ok_e) else 0.0
    return out
