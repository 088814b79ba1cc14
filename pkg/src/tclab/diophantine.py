"""Continued fractions, Diophantine constants and return times of the rotation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np
from numba import njit

from .circle import circle_dist, theta_at
from .errors import PrecisionExhausted

KAPPA_Q_MAX = 10**6
TERMINATION_ERR = Fraction(1, 10**6)


@dataclass(frozen=True)
class ContinuedFraction:
    quotients: tuple
    convergents: tuple  # (p_k, q_k) for k = 1..len(quotients)
    terminated: bool = False


@dataclass(frozen=True)
class RotationNumber:
    """Irrational rotation ``omega = hi + lo`` with its (DC) constants.

    ``kappa`` is the empirical minimum of ``q**tau * ||q omega||`` over
    ``q <= KAPPA_Q_MAX``; it bounds the true constant from above.
    """

    hi: float
    lo: float
    partial_quotients: tuple
    kappa: float
    tau: float = 1.0
    label: str = field(default="", compare=False)

    @property
    def value(self) -> float:
        return self.hi

    def exact(self) -> Fraction:
        return Fraction(self.hi) + Fraction(self.lo)

    @classmethod
    def from_decimal(cls, text, tau=1.0, label=None, cf_depth=40):
        with localcontext() as ctx:
            ctx.prec = 60
            d = Decimal(text)
            hi = float(d)
            lo = float(d - Decimal(hi))
        if not 0.0 < hi < 1.0:
            raise ValueError(f"rotation number must lie in (0, 1), got {text}")
        exact = Fraction(hi) + Fraction(lo)
        try:
            cf = continued_fraction(exact, cf_depth, uncertainty=Fraction(2) ** -100)
            quotients = cf.quotients
        except PrecisionExhausted as exc:
            quotients = tuple(exc.quotients)
        if not quotients:
            raise ValueError("rotation number has an empty continued fraction")
        kappa = estimate_kappa((hi, lo), tau, KAPPA_Q_MAX)
        return cls(hi, lo, tuple(quotients), kappa, tau, label or str(text))

    @classmethod
    def golden(cls, tau=1.0):
        with localcontext() as ctx:
            ctx.prec = 60
            text = str((Decimal(5).sqrt() - 1) / 2)
        return cls.from_decimal(text, tau=tau, label="golden")

    def to_dict(self):
        return {
            "label": self.label,
            "hi": self.hi,
            "lo": self.lo,
            "kappa": self.kappa,
            "tau": self.tau,
            "partial_quotients": list(self.partial_quotients[:20]),
        }


def _as_fraction(value):
    if isinstance(value, RotationNumber):
        return value.exact(), Fraction(2) ** -100
    if isinstance(value, Fraction):
        return value, Fraction(0)
    if isinstance(value, (str, Decimal)):
        return Fraction(Decimal(value)), Fraction(0)
    v = float(value)
    return Fraction(v), Fraction(math.ulp(v)) / 2


def continued_fraction(value, depth, uncertainty=None) -> ContinuedFraction:
    """Partial quotients ``[a1, a2, ...]`` of ``0 < value < 1``.

    Quotients are computed exactly from the rational represented by
    ``value`` while an error bound (initially half an ulp for floats) is
    propagated. When a remainder is within the bound of an integer the
    expansion is treated as terminated; when the bound no longer
    determines the next quotient, ``PrecisionExhausted`` is raised.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    x, err = _as_fraction(value)
    if uncertainty is not None:
        err = Fraction(uncertainty)
    if not 0 < x < 1:
        raise ValueError("value must lie strictly between 0 and 1")

    quotients = []
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    convergents = []
    rem = x
    terminated = False
    while len(quotients) < depth:
        inv = 1 / rem
        # d(1/r) = dr / r^2
        err = err / (rem * rem) if err else err
        a = math.floor(inv)
        frac = inv - a
        nearest = round(inv)
        if err and abs(inv - nearest) <= err:
            if err > TERMINATION_ERR:
                # too blurred to tell a terminating expansion from a long one
                raise PrecisionExhausted(len(quotients), quotients)
            a, frac = nearest, Fraction(0)
        elif err and (frac <= err or 1 - frac <= err):
            raise PrecisionExhausted(len(quotients), quotients)
        if a < 1:
            raise PrecisionExhausted(len(quotients), quotients)
        quotients.append(int(a))
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        convergents.append((int(p), int(q)))
        if frac == 0:
            terminated = True
            break
        rem = frac
    return ContinuedFraction(tuple(quotients), tuple(convergents), terminated)


def _split_omega(omega):
    if isinstance(omega, RotationNumber):
        return omega.hi, omega.lo
    if isinstance(omega, tuple):
        return float(omega[0]), float(omega[1])
    return float(omega), 0.0


@njit(cache=True, nogil=True)
def _kappa_kernel(w_hi, w_lo, tau, q_max):
    best = np.inf
    for q in range(1, q_max + 1):
        fq = float(q)
        d = circle_dist(theta_at(0.0, fq, w_hi, w_lo), 0.0)
        v = fq**tau * d
        if v < best:
            best = v
    return best


def estimate_kappa(omega, tau, q_max) -> float:
    """``min_{1<=q<=q_max} q**tau * dist(q*omega, Z)``."""
    if q_max < 2:
        raise ValueError("q_max must be >= 2")
    hi, lo = _split_omega(omega)
    return float(_kappa_kernel(hi, lo, float(tau), int(q_max)))


def min_return_time(epsilon, kappa, tau) -> int:
    """Lower bound ``[(kappa/epsilon)**(1/tau)]`` on returns to an interval."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return int(math.floor((kappa / epsilon) ** (1.0 / tau)))


@njit(cache=True, nogil=True)
def _first_return_kernel(a0, length, n_max, w_hi, w_lo):
    for m in range(1, n_max + 1):
        shifted = theta_at(a0, float(m), w_hi, w_lo)
        if length == 0.0:
            if shifted == a0:
                return m
            continue
        if length >= 0.5:
            return m
        d = shifted - a0
        d = d - np.floor(d)
        if d <= length or d >= 1.0 - length:
            return m
    return -1


def verify_no_return(interval, n_max, omega):
    """Smallest ``m in [1, n_max]`` with ``(I + m*omega) & I`` nonempty, else None.

    Brute force: the left endpoint is rotated and the two arcs compared
    directly. ``interval`` is ``(a, b)`` with ``b >= a`` (``b`` may exceed
    1 to wrap); ``b < a`` denotes the empty interval.
    """
    a, b = float(interval[0]), float(interval[1])
    if b < a:
        return None
    length = b - a
    if length >= 1.0:
        raise ValueError("interval length must be < 1")
    hi, lo = _split_omega(omega)
    m = _first_return_kernel(a % 1.0, length, int(n_max), hi, lo)
    return None if m < 0 else int(m)
