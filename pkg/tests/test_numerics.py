import math

import numpy as np
import pytest
import scipy.integrate
import scipy.optimize
from hypothesis import given, settings
from hypothesis import strategies as st

from ltbmap import taylor
from ltbmap.exceptions import BracketError, QuadratureError, SingularityError, StepUnderflowError
from ltbmap.numerics import (
    EventSpec,
    IvpSpec,
    QuadratureSpec,
    find_root_bracketed,
    integrate_adaptive,
    solve_ivp,
)


# quadrature

@pytest.mark.parametrize(
    "f, a, b",
    [
        (np.sin, 0.0, math.pi),
        (lambda x: np.exp(-x * x), -3.0, 2.0),
        (lambda x: np.abs(x - 0.3), 0.0, 1.0),
        (lambda x: np.cos(40 * x), 0.0, 1.0),
    ],
)
def test_quadrature_matches_scipy(f, a, b):
    want, _ = scipy.integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=500)
    got = integrate_adaptive(f, a, b, QuadratureSpec(rel_tol=1e-12))
    assert got == pytest.approx(want, rel=1e-10, abs=1e-13)


def test_quadrature_endpoint_singularity_exact():
    got = integrate_adaptive(lambda x: 1.0 / np.sqrt(x), 1e-8, 1.0, QuadratureSpec(rel_tol=1e-12))
    assert got == pytest.approx(2.0 * (1.0 - 1e-4), rel=1e-11)


def test_quadrature_orientation_and_empty():
    f = lambda x: x**3 + 1.0
    assert integrate_adaptive(f, 2.0, 0.0) == pytest.approx(-integrate_adaptive(f, 0.0, 2.0))
    assert integrate_adaptive(f, 1.5, 1.5) == 0.0


def test_quadrature_full_output_error_estimate():
    val, err = integrate_adaptive(np.exp, 0.0, 1.0, full_output=True)[:2]
    assert abs(val - (math.e - 1.0)) <= max(err, 1e-15) * 10
    assert err < 1e-10


def test_quadrature_depth_exhaustion_raises():
    spec = QuadratureSpec(abs_tol=1e-300, rel_tol=0.0, max_depth=3)
    with pytest.raises(QuadratureError):
        integrate_adaptive(lambda x: np.sign(x - 1 / 3), 0.0, 1.0, spec)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_depth=0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 3.0))
def test_quadrature_polynomial_exact(c0, c1, b):
    f = lambda x: c0 + c1 * x + x**5
    want = c0 * b + c1 * b * b / 2 + b**6 / 6
    assert integrate_adaptive(f, 0.0, b) == pytest.approx(want, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_quadrature_additive(a, b, c):
    f = lambda x: np.exp(np.sin(3 * x))
    whole = integrate_adaptive(f, a, c)
    split = integrate_adaptive(f, a, b) + integrate_adaptive(f, b, c)
    assert whole == pytest.approx(split, rel=1e-10, abs=1e-12)


# root finding

@pytest.mark.parametrize(
    "f, lo, hi",
    [
        (lambda x: x**3 - 2.0, 0.0, 2.0),
        (lambda x: math.cos(x) - x, 0.0, 1.0),
        (lambda x: math.exp(x) - 10.0, -5.0, 5.0),
    ],
)
def test_root_matches_brentq(f, lo, hi):
    want = scipy.optimize.brentq(f, lo, hi, xtol=1e-15)
    assert find_root_bracketed(f, lo, hi, 1e-14) == pytest.approx(want, abs=1e-10)


def test_root_triple_zero():
    f = lambda x: (x - 1.0) ** 3
    # the residual test stops once |f| <= tol, which for a triple zero is far from the root
    assert find_root_bracketed(f, 0.0, 3.0, 1e-14) == pytest.approx(1.0, abs=1e-4)
    assert find_root_bracketed(f, 0.0, 3.0, 1e-14, ftol=0.0) == pytest.approx(1.0, abs=1e-13)


def test_root_endpoints_and_bad_bracket():
    assert find_root_bracketed(lambda x: x - 1.0, 1.0, 2.0) == 1.0
    with pytest.raises(BracketError):
        find_root_bracketed(lambda x: x * x + 1.0, -1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(0.01, 3))
def test_root_property(root, width):
    f = lambda x: math.atan(x - root)
    x = find_root_bracketed(f, root - width, root + 2 * width, 1e-13)
    assert abs(x - root) < 1e-10


# taylor arithmetic

def test_taylor_ops_against_known_series():
    n = 8
    x = np.zeros(n)
    x[1] = 1.0
    one_plus = np.zeros(n)
    one_plus[:2] = 1.0
    inv = taylor.div(np.eye(1, n)[0], one_plus)
    assert np.allclose(inv, [(-1) ** k for k in range(n)])
    sq = taylor.power(one_plus, 0.5)
    want = [1, 0.5, -0.125, 0.0625, -0.0390625]
    assert np.allclose(sq[:5], want)
    assert np.allclose(taylor.mul(sq, sq)[:n], one_plus)
    assert taylor.evaluate(taylor.integrate(one_plus), 2.0) == pytest.approx(4.0)
    assert np.allclose(taylor.derivative(taylor.integrate(one_plus))[:2], one_plus[:2])
    assert np.allclose(taylor.shift_down(x)[:1], [1.0])


# IVP

def test_dopri_exponential_and_dense_output():
    traj = solve_ivp(lambda z, y: -y, [1.0], 0.0, 3.0, IvpSpec(rel_tol=1e-11, abs_tol=1e-14))
    zs = np.linspace(0, 3, 77)
    got = traj(zs)[:, 0]
    assert np.max(np.abs(got - np.exp(-zs))) < 1e-9
    assert np.max(np.abs(traj.derivative(zs)[:, 0] + np.exp(-zs))) < 1e-8
    assert traj.status == "completed" and traj.z_end == 3.0


def test_dopri_backward_matches_scipy():
    rhs = lambda z, y: np.array([y[1], -y[0] + 0.1 * math.sin(z)])
    ours = solve_ivp(rhs, [1.0, 0.0], 2.0, -1.0, IvpSpec(rel_tol=1e-11, abs_tol=1e-13))
    ref = scipy.integrate.solve_ivp(rhs, (2.0, -1.0), [1.0, 0.0], rtol=1e-12, atol=1e-13, method="DOP853")
    assert np.allclose(ours(-1.0), ref.y[:, -1], atol=1e-9)


def test_terminal_event_located():
    ev = EventSpec(lambda z, y: y[0] - 0.5, "falling", True, 1e-13, "half")
    traj = solve_ivp(lambda z, y: -y, [1.0], 0.0, 5.0, None, [ev])
    assert traj.terminated and traj.status == "terminal_event"
    assert traj.z_end == pytest.approx(math.log(2.0), abs=1e-9)
    assert traj.events[-1].name == "half"


def test_nonterminal_events_and_direction():
    rising = EventSpec(lambda z, y: math.sin(z), "rising", False, 1e-12, "up")
    both = EventSpec(lambda z, y: math.sin(z), "any", False, 1e-12, "any")
    traj = solve_ivp(lambda z, y: np.zeros(1), [0.0], 0.5, 10.0, None, [rising, both])
    ups = [e.z for e in traj.events if e.name == "up"]
    anys = [e.z for e in traj.events if e.name == "any"]
    assert np.allclose(ups, [2 * math.pi], atol=1e-9)
    assert np.allclose(anys, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-9)


def test_recoverable_errors_reject_steps():
    def rhs(z, y):
        if z > 1.2 and y[0] > 0:
            raise SingularityError("test", z, {})
        return np.array([1.0])

    with pytest.raises(StepUnderflowError) as info:
        solve_ivp(rhs, [0.0], 0.0, 2.0, IvpSpec(max_step=0.5))
    exc = info.value
    assert exc.trajectory is not None and exc.trajectory.z_end <= 1.2 + 1e-9
    assert exc.z == pytest.approx(1.2, abs=1e-6)


def test_ivp_spec_validation():
    with pytest.raises(ValueError):
        IvpSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        IvpSpec(min_step=1.0, initial_step=0.1)
    with pytest.raises(ValueError):
        EventSpec(lambda z, y: 0.0, direction="sideways")


@settings(max_examples=25, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(0.1, 2.0))
def test_ivp_linear_property(k, length):
    traj = solve_ivp(lambda z, y: k * y, [1.0], 0.0, length, IvpSpec(rel_tol=1e-10, abs_tol=1e-13))
    assert traj(length)[0] == pytest.approx(math.exp(k * length), rel=1e-8)
