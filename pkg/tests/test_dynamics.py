import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tclab.dynamics import (
    LiftedState,
    RegionConstants,
    SystemParams,
    forcing_c,
    forcing_c_dbeta,
    forcing_c_dtheta,
    forcing_grid,
    iterate,
    lyapunov_estimate,
    orbit_kernel,
    peak_profile_g,
    quad_p,
    quad_p_prime,
    step,
)
from tclab.errors import DegenerateOrbit

mpmath.mp.dps = 40


def _mp_forcing(theta, alpha, beta, lam):
    g = mpmath.cos(2 * mpmath.pi * (theta - alpha / 2)) - mpmath.cos(mpmath.pi * alpha)
    return mpmath.mpf(3) / 2 + beta * mpmath.mpf(5) / 2 / (1 + lam * g * g)


def test_quad_examples():
    assert quad_p(0.0) == 0.0
    assert quad_p(0.5) == 0.25
    assert quad_p(1 / 3) == pytest.approx(2 / 9, abs=1e-16)
    assert quad_p_prime(0.5) == 0.0
    assert quad_p_prime(0.0) == 1.0
    assert quad_p_prime(1 / 3) == pytest.approx(1 / 3, abs=1e-16)


@given(st.floats(0.0, 1.0))
def test_quad_symmetry(x):
    assert quad_p(x) == pytest.approx(quad_p(1.0 - x), abs=1e-16)
    assert 0.0 <= quad_p(x) <= 0.25


@given(st.floats(0.0, 1.0, exclude_max=True))
def test_profile_zeros(alpha):
    assert abs(peak_profile_g(alpha, alpha)) < 1e-12
    assert abs(peak_profile_g(0.0, alpha)) < 1e-12


def test_profile_quarter():
    assert peak_profile_g(0.25, 0.5) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("beta", [0.0, 0.3, 1.0])
def test_forcing_peaks(golden, beta):
    p = SystemParams(alpha=0.61, beta=beta, lam=1e6, omega=golden)
    assert forcing_c(0.61, p) == pytest.approx(1.5 + 2.5 * beta, abs=1e-12)
    assert forcing_c(0.0, p) == pytest.approx(1.5 + 2.5 * beta, abs=1e-12)
    assert abs(forcing_c_dtheta(0.61, p)) < 1e-9
    assert forcing_c_dbeta(0.0, p) == pytest.approx(2.5)


def test_forcing_zero_beta_is_flat(golden):
    p = SystemParams(alpha=0.61, beta=0.0, lam=1e6, omega=golden)
    c, ct, _ = forcing_grid(np.linspace(0, 1, 1001), p)
    assert np.all(c == 1.5) and np.all(ct == 0.0)


def test_forcing_against_high_precision(golden, rng):
    for _ in range(200):
        th, alpha, beta = rng.random(), rng.uniform(0.55, 0.65), rng.random()
        lam = 10.0 ** rng.uniform(2, 7)
        p = SystemParams(alpha=alpha, beta=beta, lam=lam, omega=golden)
        want = _mp_forcing(mpmath.mpf(th), mpmath.mpf(alpha), mpmath.mpf(beta), lam)
        assert forcing_c(th, p) == pytest.approx(float(want), rel=1e-13)
        dt = mpmath.diff(lambda t: _mp_forcing(t, mpmath.mpf(alpha), mpmath.mpf(beta), lam), th)
        assert forcing_c_dtheta(th, p) == pytest.approx(float(dt), rel=1e-8, abs=1e-9)


def test_forcing_grid_matches_scalar(mid_params, rng):
    th = rng.random(500)
    c, ct, cb = forcing_grid(th, mid_params)
    for i in range(0, 500, 37):
        assert c[i] == pytest.approx(forcing_c(th[i], mid_params), rel=1e-14)
        assert ct[i] == pytest.approx(forcing_c_dtheta(th[i], mid_params), rel=1e-10, abs=1e-12)
        assert cb[i] == pytest.approx(forcing_c_dbeta(th[i], mid_params), rel=1e-14)


def test_forcing_bounds_grid(mid_params):
    for beta in (0.0, 0.5, 1.0):
        c = forcing_grid(np.linspace(0, 1, 100001), mid_params.with_beta(beta))[0]
        assert c.min() >= 1.5 and c.max() <= 1.5 + 2.5 * beta + 1e-15


def test_flat_outside_peaks(mid_params):
    rc = RegionConstants.from_lambda(mid_params.lam)
    th = np.linspace(0, 1, 200001)
    w = mid_params.omega.value
    d0 = np.abs((th + 0.5) % 1 - 0.5)
    dw = np.abs((th - w + 0.5) % 1 - 0.5)
    th = th[(d0 > rc.peak_halfwidth) & (dw > rc.peak_halfwidth)]
    bound = mid_params.lam**-0.5
    for beta in (0.5, 1.0):
        c, ct, cb = forcing_grid(th, mid_params.with_beta(beta))
        assert np.abs(c - 1.5).max() < bound
        assert np.abs(ct).max() < bound
        assert np.abs(cb).max() < bound


def test_step_examples(golden, mid_params):
    p0 = mid_params.with_beta(0.0)
    s = step(LiftedState(0.2, 1 / 3), p0)
    assert s.x == pytest.approx(1 / 3, abs=1e-16)
    assert s.theta == pytest.approx(0.2 + golden.value, abs=1e-16)
    assert step(LiftedState(0.7, 0.0), mid_params).x == 0.0
    wrap = step(LiftedState(0.9, 0.3), mid_params)
    assert 0.0 <= wrap.theta < 1.0


def test_iterate_identity_and_fixed_fiber(mid_params):
    s = LiftedState(0.3, 0.2, 1.0, 2.0)
    assert iterate(s, 0, mid_params) == s
    far = iterate(LiftedState(0.3, 1 / 3), 10**6, mid_params.with_beta(0.0))
    assert abs(far.x - 1 / 3) <= 1e-12
    with pytest.raises(ValueError):
        iterate(s, -1, mid_params)


def test_iterate_matches_repeated_step(mid_params):
    s = LiftedState(0.123, 0.4)
    t = s
    for _ in range(50):
        t = step(t, mid_params)
    u = iterate(s, 50, mid_params)
    assert u.x == pytest.approx(t.x, rel=1e-12)
    assert u.dx_dtheta == pytest.approx(t.dx_dtheta, rel=1e-9)
    assert u.theta == pytest.approx(t.theta, abs=1e-13)


def test_orbit_against_high_precision(golden, mid_params):
    # fiber in double precision, independent high-precision replay
    alpha, beta, lam = mid_params.alpha, 0.9, mid_params.lam
    th0, x0, n = 0.31, 0.27, 60
    got = iterate(LiftedState(th0, x0), n, mid_params.with_beta(beta)).x
    w = (mpmath.sqrt(5) - 1) / 2
    x = mpmath.mpf(x0)
    for k in range(n):
        th = mpmath.frac(th0 + k * w)
        x = _mp_forcing(th, mpmath.mpf(alpha), mpmath.mpf(beta), lam) * x * (1 - x)
    assert got == pytest.approx(float(x), rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.integers(1, 300))
def test_range_invariance(theta, x, beta, n):
    from tclab.diophantine import RotationNumber
    p = SystemParams(alpha=0.617, beta=beta, lam=1e6, omega=RotationNumber.golden())
    s = iterate(LiftedState(theta % 1.0, x), n, p)
    assert 0.0 <= s.x <= 1.0


def test_tangent_lift_central_differences(golden, rng):
    h = 1e-7
    for _ in range(40):
        th, x0 = rng.random(), rng.uniform(0.05, 0.95)
        beta = rng.uniform(0.0, 0.95)
        n = int(rng.integers(1, 201))
        p = SystemParams(alpha=0.617, beta=beta, lam=1e6, omega=golden)
        args = p.kernel_args
        _, _, dt, db = orbit_kernel(th, x0, 0.0, 0.0, n, *args)
        xp = orbit_kernel(th + h, x0, 0.0, 0.0, n, *args)[1]
        xm = orbit_kernel(th - h, x0, 0.0, 0.0, n, *args)[1]
        fd = (xp - xm) / (2 * h)
        assert abs(dt - fd) / max(1.0, abs(dt)) <= 1e-5
        a2 = (args[0], beta + h) + args[2:]
        a1 = (args[0], beta - h) + args[2:]
        fdb = (orbit_kernel(th, x0, 0.0, 0.0, n, *a2)[1]
               - orbit_kernel(th, x0, 0.0, 0.0, n, *a1)[1]) / (2 * h)
        assert abs(db - fdb) / max(1.0, abs(db)) <= 1e-5


def test_lyapunov_unforced_limits(mid_params):
    p0 = mid_params.with_beta(0.0)
    assert lyapunov_estimate(0.1, 1 / 3, 1000, p0) == pytest.approx(-math.log(2), abs=1e-12)
    assert lyapunov_estimate(0.1, 0.0, 1000, p0) == pytest.approx(math.log(1.5), abs=1e-12)


def test_lyapunov_half_beta_below_bound(mid_params):
    value = lyapunov_estimate(0.1, 1 / 3, 10**6, mid_params.with_beta(0.5))
    assert value <= 0.5 * math.log(0.6)


def test_lyapunov_degenerate_orbit(mid_params):
    # a one-step orbit starting on the critical point drops its only term
    with pytest.raises(DegenerateOrbit):
        lyapunov_estimate(0.1, 0.5, 1, mid_params.with_beta(0.0))
    with pytest.raises(ValueError):
        lyapunov_estimate(0.1, 0.3, 0, mid_params)


def test_params_validation(golden):
    with pytest.raises(ValueError):
        SystemParams(alpha=0.6, beta=1.5, lam=1e6, omega=golden)
    with pytest.raises(ValueError):
        SystemParams(alpha=0.6, beta=0.5, lam=0.0, omega=golden)
    with pytest.raises(ValueError):
        SystemParams(alpha=1.0, beta=0.5, lam=1e6, omega=golden)


def test_region_constants():
    rc = RegionConstants.from_lambda(1e6)
    assert rc.peak_halfwidth == pytest.approx(1e6 ** (-1 / 7))
    assert rc.contract_interval == (1 / 3 - 0.01, 1 / 3 + 0.01)
    assert rc.in_contract(1 / 3) and not rc.in_contract(0.3)
    assert rc.K0 == 1 and rc.M0 == 2
