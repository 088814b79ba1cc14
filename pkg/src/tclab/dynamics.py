"""Forcing profile, fiber map and the tangent-lifted skew product.

The map is ``(theta, x) -> (theta + omega, c(theta) * x * (1 - x))`` where
``c`` is a flat level 3/2 with two Lorentzian-like bumps of height ``5*beta/2``
at ``theta = 0`` and ``theta = alpha``.

Hot loops are numba kernels taking plain floats; the dataclass wrappers
below are for library callers and tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .circle import theta_at
from .diophantine import RotationNumber
from .errors import DegenerateOrbit

TWO_PI = 2.0 * math.pi
# terms of the Lyapunov sum with |1 - 2x| below this are dropped
CRITICAL_EPS = 1e-300
MAX_DROPPED_FRACTION = 1e-6
SEED_LOW = 1.0 / 3.0 - 0.01
SEED_HIGH = 1.0 / 3.0 + 0.01


@dataclass(frozen=True)
class SystemParams:
    alpha: float
    beta: float
    lam: float
    omega: RotationNumber

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if not self.lam > 0.0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")

    def with_beta(self, beta):
        return replace(self, beta=float(beta))

    def with_alpha(self, alpha):
        return replace(self, alpha=float(alpha))

    @property
    def kernel_args(self):
        """``(alpha, beta, lam, w_hi, w_lo)`` in the order the kernels take them."""
        return (self.alpha, self.beta, self.lam, self.omega.hi, self.omega.lo)

    def alpha_window(self):
        return alpha_window(self.lam, self.omega.value)

    def alpha_in_window(self) -> bool:
        lo, hi = self.alpha_window()
        return lo <= self.alpha <= hi


def alpha_window(lam, omega):
    """Window ``[omega - lam**(-2/5)/2, omega - 2*lam**(-2/3)]`` holding alpha_c."""
    return omega - 0.5 * lam ** (-0.4), omega - 2.0 * lam ** (-2.0 / 3.0)


@dataclass(frozen=True)
class LiftedState:
    theta: float
    x: float
    dx_dtheta: float = 0.0
    dx_dbeta: float = 0.0


@dataclass(frozen=True)
class RegionConstants:
    peak_halfwidth: float  # first peak neighbourhood is [-h, h]
    contract_lo: float
    contract_hi: float
    M0: int
    K0: int

    @classmethod
    def from_lambda(cls, lam, tau=1.0):
        return cls(
            peak_halfwidth=lam ** (-1.0 / 7.0),
            contract_lo=1.0 / 3.0 - 0.01,
            contract_hi=1.0 / 3.0 + 0.01,
            M0=int(math.floor(lam ** (1.0 / (14.0 * tau)))),
            K0=int(math.floor(lam ** (1.0 / (28.0 * tau)))),
        )

    @property
    def peak_interval(self):
        return (-self.peak_halfwidth, self.peak_halfwidth)

    @property
    def contract_interval(self):
        return (self.contract_lo, self.contract_hi)

    def in_contract(self, x) -> bool:
        return self.contract_lo <= x <= self.contract_hi


# -- scalar kernels ----------------------------------------------------------


@njit(cache=True, nogil=True)
def quad_p(x):
    return x * (1.0 - x)


@njit(cache=True, nogil=True)
def quad_p_prime(x):
    return 1.0 - 2.0 * x


@njit(cache=True, nogil=True)
def peak_profile_g(theta, alpha):
    return math.cos(TWO_PI * (theta - 0.5 * alpha)) - math.cos(math.pi * alpha)


@njit(cache=True, nogil=True)
def forcing(theta, alpha, beta, lam):
    """Return ``(c, dc/dtheta, dc/dbeta)`` at ``theta``."""
    arg = TWO_PI * (theta - 0.5 * alpha)
    g = math.cos(arg) - math.cos(math.pi * alpha)
    dg = -TWO_PI * math.sin(arg)
    den = 1.0 + lam * g * g
    bump = 2.5 / den
    c = 1.5 + beta * bump
    dc_dtheta = beta * (-5.0 * lam * g * dg) / (den * den)
    return c, dc_dtheta, bump


@njit(cache=True, nogil=True)
def lifted_step(theta, x, dxt, dxb, alpha, beta, lam):
    c, ct, cb = forcing(theta, alpha, beta, lam)
    p = x * (1.0 - x)
    mult = c * (1.0 - 2.0 * x)
    return c * p, ct * p + mult * dxt, cb * p + mult * dxb


@njit(cache=True, nogil=True)
def orbit_kernel(theta0, x, dxt, dxb, n, alpha, beta, lam, w_hi, w_lo):
    """Advance a lifted state ``n`` steps; returns ``(theta_n, x, dxt, dxb)``."""
    for k in range(n):
        th = theta_at(theta0, float(k), w_hi, w_lo)
        x, dxt, dxb = lifted_step(th, x, dxt, dxb, alpha, beta, lam)
    return theta_at(theta0, float(n), w_hi, w_lo), x, dxt, dxb


@njit(cache=True, nogil=True)
def orbit_path(theta0, x0, n, alpha, beta, lam, w_hi, w_lo):
    """Fiber values ``x_0..x_n`` of the plain (unlifted) orbit."""
    out = np.empty(n + 1)
    x = x0
    out[0] = x
    for k in range(n):
        th = theta_at(theta0, float(k), w_hi, w_lo)
        c, ct, cb = forcing(th, alpha, beta, lam)
        x = c * x * (1.0 - x)
        out[k + 1] = x
    return out


@njit(cache=True, nogil=True)
def pullback_kernel(theta, depth, alpha, beta, lam, w_hi, w_lo, lo_seed, hi_seed):
    """Pull two seeds forward from ``theta - depth*omega`` to ``theta``.

    Angles are taken relative to the target so the final fiber is
    evaluated at ``theta`` itself. Returns ``(psi, dpsi_dtheta,
    dpsi_dbeta, residual, dtheta_residual)``.
    """
    x, xt, xb = lo_seed, 0.0, 0.0
    y, yt, yb = hi_seed, 0.0, 0.0
    for k in range(depth):
        th = theta_at(theta, float(k - depth), w_hi, w_lo)
        c, ct, cb = forcing(th, alpha, beta, lam)
        px = x * (1.0 - x)
        py = y * (1.0 - y)
        mx = c * (1.0 - 2.0 * x)
        my = c * (1.0 - 2.0 * y)
        xt = ct * px + mx * xt
        xb = cb * px + mx * xb
        yt = ct * py + my * yt
        yb = cb * py + my * yb
        x = c * px
        y = c * py
    return (
        0.5 * (x + y),
        0.5 * (xt + yt),
        0.5 * (xb + yb),
        abs(x - y),
        abs(xt - yt),
    )


@njit(cache=True, nogil=True)
def separation_kernel(theta0, x0, y0, n, alpha, beta, lam, w_hi, w_lo, ks):
    """``|x_k - y_k|`` at the step counts ``ks`` (sorted) for two fiber seeds.

    The gap is propagated with ``d' = c * d * (1 - x - y)``, which is exact
    algebra and avoids the cancellation of subtracting two nearby orbits.
    """
    out = np.empty(ks.shape[0])
    x = x0
    d = x0 - y0
    j = 0
    for k in range(n + 1):
        while j < ks.shape[0] and ks[j] == k:
            out[j] = abs(d)
            j += 1
        if k == n:
            break
        th = theta_at(theta0, float(k), w_hi, w_lo)
        c, ct, cb = forcing(th, alpha, beta, lam)
        y = x - d
        d = c * d * (1.0 - x - y)
        x = c * x * (1.0 - x)
    return out


@njit(cache=True, nogil=True)
def lyapunov_kernel(theta0, x0, n, burn, alpha, beta, lam, w_hi, w_lo):
    """Sum of ``log|c p'(x)|`` over ``n`` steps after ``burn`` steps.

    Returns ``(sum, dropped)``; terms at the critical point are dropped.
    """
    x = x0
    for k in range(burn):
        th = theta_at(theta0, float(k), w_hi, w_lo)
        c, ct, cb = forcing(th, alpha, beta, lam)
        x = c * x * (1.0 - x)
    total = 0.0
    dropped = 0
    for k in range(burn, burn + n):
        th = theta_at(theta0, float(k), w_hi, w_lo)
        c, ct, cb = forcing(th, alpha, beta, lam)
        slope = 1.0 - 2.0 * x
        if abs(slope) < CRITICAL_EPS:
            dropped += 1
        else:
            total += math.log(abs(c * slope))
        x = c * x * (1.0 - x)
    return total, dropped


# -- public wrappers ---------------------------------------------------------


def forcing_c(theta, params: SystemParams) -> float:
    return forcing(theta, params.alpha, params.beta, params.lam)[0]


def forcing_c_dtheta(theta, params: SystemParams) -> float:
    return forcing(theta, params.alpha, params.beta, params.lam)[1]


def forcing_c_dbeta(theta, params: SystemParams) -> float:
    return forcing(theta, params.alpha, params.beta, params.lam)[2]


def forcing_grid(thetas, params: SystemParams):
    """Vectorised ``(c, dc/dtheta, dc/dbeta)`` over an array of angles."""
    thetas = np.asarray(thetas, dtype=float)
    arg = TWO_PI * (thetas - 0.5 * params.alpha)
    g = np.cos(arg) - math.cos(math.pi * params.alpha)
    dg = -TWO_PI * np.sin(arg)
    den = 1.0 + params.lam * g * g
    bump = 2.5 / den
    c = 1.5 + params.beta * bump
    ct = params.beta * (-5.0 * params.lam * g * dg) / (den * den)
    return c, ct, bump


def step(state: LiftedState, params: SystemParams) -> LiftedState:
    x, dxt, dxb = lifted_step(
        state.theta, state.x, state.dx_dtheta, state.dx_dbeta,
        params.alpha, params.beta, params.lam,
    )
    theta = theta_at(state.theta, 1.0, params.omega.hi, params.omega.lo)
    return LiftedState(theta, x, dxt, dxb)


def iterate(state: LiftedState, n: int, params: SystemParams) -> LiftedState:
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return state
    theta, x, dxt, dxb = orbit_kernel(
        state.theta, state.x, state.dx_dtheta, state.dx_dbeta, int(n),
        *params.kernel_args,
    )
    return LiftedState(theta, x, dxt, dxb)


def lyapunov_estimate(theta0, x0, n, params: SystemParams, burn=0) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    total, dropped = lyapunov_kernel(
        float(theta0), float(x0), int(n), int(burn), *params.kernel_args
    )
    if dropped > MAX_DROPPED_FRACTION * n:
        raise DegenerateOrbit(
            f"{dropped} of {n} terms sat on the critical point x = 1/2"
        )
    return total / n
