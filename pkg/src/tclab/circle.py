"""Compensated circle arithmetic.

Orbit angles are always computed as ``frac(theta0 + n*omega)`` from the
starting angle, never by repeated addition, so the error does not grow
with ``n``. ``omega`` is carried as an unevaluated sum ``hi + lo``.
"""
import math

from numba import njit

_SPLITTER = 134217729.0  # 2**27 + 1


@njit(cache=True, nogil=True)
def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


@njit(cache=True, nogil=True)
def two_prod(a, b):
    """Dekker product: ``p + err == a*b`` exactly (no FMA on py3.10)."""
    p = a * b
    c = _SPLITTER * a
    ahi = c - (c - a)
    alo = a - ahi
    c = _SPLITTER * b
    bhi = c - (c - b)
    blo = b - bhi
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


@njit(cache=True, nogil=True)
def theta_at(theta0, n, w_hi, w_lo):
    """``frac(theta0 + n*(w_hi + w_lo))`` to within a few ulps.

    ``n`` is a float holding an integer (negative allowed, |n| < 2**53).
    """
    p, e1 = two_prod(n, w_hi)
    s, e2 = two_sum(theta0, p)
    lo = e1 + e2 + n * w_lo
    s = s - math.floor(s)
    r = s + lo
    r = r - math.floor(r)
    if r >= 1.0:
        r = 0.0
    return r


@njit(cache=True, nogil=True)
def circle_dist(a, b):
    """Distance between two points of the circle R/Z."""
    d = abs(a - b)
    d = d - math.floor(d)
    return min(d, 1.0 - d)


def wrap(theta):
    """Reduce a float to [0, 1)."""
    r = theta - math.floor(theta)
    return 0.0 if r >= 1.0 else r
