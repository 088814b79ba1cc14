"""Attracting invariant curve by pullback, with tangent derivatives."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .circle import theta_at
from .dynamics import SEED_HIGH, SEED_LOW, SystemParams, forcing
from .errors import NotConverged
from .parallel import chunks, pmap, resolve_threads

SEED_GAP = SEED_HIGH - SEED_LOW
CONTRACTION = 0.6  # per-two-step contraction factor inside C
DEFAULT_TOL = 1e-12
BETA_ONE_DEPTH = 400  # fixed depth for the non-convergent beta = 1 curves
MAX_DOUBLINGS = 3
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PullbackResult:
    psi: float
    dpsi_dtheta: float
    dpsi_dbeta: float
    residual: float
    dtheta_residual: float
    depth: int
    converged: bool


@dataclass
class CurveSample:
    thetas: np.ndarray
    psi: np.ndarray
    dpsi_dtheta: np.ndarray
    dpsi_dbeta: np.ndarray
    depth: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    params: SystemParams
    tol: float = DEFAULT_TOL

    def __len__(self):
        return len(self.thetas)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def merge(self, other: "CurveSample") -> "CurveSample":
        """Union of two samples of the same curve, sorted by theta."""
        cat = {
            name: np.concatenate([getattr(self, name), getattr(other, name)])
            for name in ("thetas", "psi", "dpsi_dtheta", "dpsi_dbeta",
                         "depth", "residual", "converged")
        }
        order = np.argsort(cat["thetas"], kind="stable")
        return CurveSample(
            **{k: v[order] for k, v in cat.items()},
            params=self.params, tol=self.tol,
        )


# -- kernels -----------------------------------------------------------------


@njit(cache=True, nogil=True)
def _pullback_one(theta, depth, alpha, beta, lam, w_hi, w_lo, x, y):
    xt = 0.0
    xb = 0.0
    yt = 0.0
    yb = 0.0
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
    return 0.5 * (x + y), 0.5 * (xt + yt), 0.5 * (xb + yb), abs(x - y), abs(xt - yt)


@njit(cache=True, nogil=True)
def _pullback_grid(thetas, depths, alpha, beta, lam, w_hi, w_lo, out):
    for i in range(thetas.shape[0]):
        r = _pullback_one(thetas[i], depths[i], alpha, beta, lam, w_hi, w_lo,
                          1.0 / 3.0 - 0.01, 1.0 / 3.0 + 0.01)
        for j in range(5):
            out[i, j] = r[j]


@njit(cache=True, nogil=True)
def _track(theta, depth, n_track, alpha, beta, lam, w_hi, w_lo, out):
    """Pull back to ``theta`` then follow the curve for ``n_track`` more steps.

    Row ``k`` of ``out`` holds ``(psi, dpsi_dtheta, dpsi_dbeta, residual)``
    at ``theta + k*omega``; the values equal pullbacks of depth
    ``depth + k`` since the curve is carried into itself by the map.
    """
    x = 1.0 / 3.0 - 0.01
    y = 1.0 / 3.0 + 0.01
    xt = 0.0
    xb = 0.0
    yt = 0.0
    yb = 0.0
    for k in range(depth + n_track + 1):
        if k >= depth:
            r = k - depth
            out[r, 0] = 0.5 * (x + y)
            out[r, 1] = 0.5 * (xt + yt)
            out[r, 2] = 0.5 * (xb + yb)
            out[r, 3] = abs(x - y)
            if r == n_track:
                break
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


# -- depth policy ------------------------------------------------------------


def t1_bound(beta) -> float:
    """``log_{5/4}(1/(10(1-beta)))``: longest expected excursion near x = 0."""
    if beta >= 1.0:
        return math.inf
    return math.log(1.0 / (10.0 * (1.0 - beta))) / math.log(1.25)


def choose_depth(beta, tol, params=None) -> int:
    """Pullback length certified by the contraction rate inside C.

    The base value is the smallest ``d`` with ``0.02 * (3/5)**(d/2) <= tol``;
    the excursion bound is added on top when positive.
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    base = 2.0 * math.log(SEED_GAP / tol) / math.log(1.0 / CONTRACTION)
    depth = max(1, math.ceil(base - 1e-9))
    extra = t1_bound(beta)
    if extra > 0.0:
        depth += math.ceil(extra)
    return depth


def _default_depth(params, tol):
    if params.beta >= 1.0:
        return BETA_ONE_DEPTH
    return choose_depth(params.beta, tol, params)


# -- pointwise and grid evaluation -------------------------------------------


def pullback_value(theta, depth, params: SystemParams, tol=DEFAULT_TOL,
                   strict=False) -> PullbackResult:
    """Attractor value and derivatives at ``theta`` from a depth-``depth`` pullback.

    Two seeds at ``1/3 +- 1/100`` with zero derivative seeds are iterated
    from ``theta - depth*omega``; the midpoint is returned and the seed gap
    is the residual. At ``beta = 1`` the result is never marked converged.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    psi, dt, db, res, dres = _pullback_one(
        float(theta), int(depth), *params.kernel_args, SEED_LOW, SEED_HIGH
    )
    ok = params.beta < 1.0 and res <= tol
    result = PullbackResult(psi, dt, db, res, dres, int(depth), ok)
    if strict and not ok:
        raise NotConverged(
            f"residual {res:.3e} above tolerance {tol:.3e} at theta={theta!r}",
            data=result,
        )
    return result


def _grid_values(thetas, depths, params, threads):
    out = np.empty((len(thetas), 5))
    args = params.kernel_args

    def run(span):
        lo, hi = span
        _pullback_grid(thetas[lo:hi], depths[lo:hi], *args, out[lo:hi])

    pmap(run, chunks(len(thetas), 4 * resolve_threads(threads)), threads)
    return out


def _as_grid(grid):
    if isinstance(grid, tuple) and len(grid) == 2 and isinstance(grid[0], (int, np.integer)):
        count, offset = grid
        thetas = (np.arange(count) + offset) / count
    else:
        thetas = np.asarray(grid, dtype=float)
    thetas = np.mod(thetas, 1.0)
    thetas[thetas >= 1.0] = 0.0
    return np.sort(thetas, kind="stable")


def sample_curve(grid, params: SystemParams, depth=None, tol=DEFAULT_TOL,
                 threads=None) -> CurveSample:
    """Pull back every grid angle.

    ``grid`` is an array of angles or ``(count, offset)`` for the uniform
    grid ``(i + offset)/count``. With ``depth=None`` the depth comes from
    ``choose_depth`` and points whose residual misses ``tol`` are redone at
    doubled depth a few times before being flagged.
    """
    thetas = _as_grid(grid)
    adaptive = depth is None
    d0 = _default_depth(params, tol) if adaptive else int(depth)
    depths = np.full(len(thetas), d0, dtype=np.int64)
    out = _grid_values(thetas, depths, params, threads)
    if adaptive and params.beta < 1.0:
        for _ in range(MAX_DOUBLINGS):
            bad = np.nonzero(out[:, 3] > tol)[0]
            if len(bad) == 0:
                break
            depths[bad] *= 2
            out[bad] = _grid_values(thetas[bad], depths[bad], params, threads)
    converged = (out[:, 3] <= tol) & (params.beta < 1.0)
    return CurveSample(
        thetas=thetas, psi=out[:, 0].copy(), dpsi_dtheta=out[:, 1].copy(),
        dpsi_dbeta=out[:, 2].copy(), depth=depths, residual=out[:, 3].copy(),
        converged=converged, params=params, tol=tol,
    )


def sample_orbit_window(center, offsets, n_track, params: SystemParams,
                        depth=None, tol=DEFAULT_TOL, threads=None) -> CurveSample:
    """Curve values at ``center + u + k*omega`` for each offset ``u`` and k <= n_track.

    One pullback per offset is carried forward along the orbit, which is
    how the thin features that follow a near-collision are resolved
    without a dense global grid.
    """
    offsets = np.asarray(offsets, dtype=float)
    d0 = _default_depth(params, tol) if depth is None else int(depth)
    args = params.kernel_args
    w_hi, w_lo = params.omega.hi, params.omega.lo
    n = n_track + 1

    def run(u):
        start = theta_at(float(center), 0.0, w_hi, w_lo) + u
        start -= math.floor(start)
        rows = np.empty((n, 4))
        _track(start, d0, n_track, *args, rows)
        ths = np.array([theta_at(start, float(k), w_hi, w_lo) for k in range(n)])
        return ths, rows

    results = pmap(run, offsets, threads)
    thetas = np.concatenate([r[0] for r in results])
    rows = np.concatenate([r[1] for r in results])
    depths = np.tile(d0 + np.arange(n, dtype=np.int64), len(offsets))
    order = np.argsort(thetas, kind="stable")
    converged = (rows[:, 3] <= tol) & (params.beta < 1.0)
    return CurveSample(
        thetas=thetas[order], psi=rows[order, 0], dpsi_dtheta=rows[order, 1],
        dpsi_dbeta=rows[order, 2], depth=depths[order], residual=rows[order, 3],
        converged=converged[order], params=params, tol=tol,
    )


# -- extremum refinement -----------------------------------------------------


def golden_section(f, a, b, bracket_tol):
    """Minimise ``f`` on ``[a, b]`` until the bracket is below ``bracket_tol``.

    Returns ``(x, f(x))`` for the best point evaluated.
    """
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    best = (c, fc) if fc <= fd else (d, fd)
    while b - a > bracket_tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
            if fc < best[1]:
                best = (c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
            if fd < best[1]:
                best = (d, fd)
        if c == d:
            break
    return best


def _bracket(thetas, i):
    lo = thetas[i - 1] if i > 0 else thetas[i] - (thetas[1] - thetas[0])
    hi = thetas[i + 1] if i + 1 < len(thetas) else thetas[i] + (thetas[-1] - thetas[-2])
    return lo, hi


def _refine(curve, i, objective, bracket_tol):
    if len(curve) < 3:
        return curve.thetas[i], objective(curve.thetas[i])
    lo, hi = _bracket(curve.thetas, i)
    x, fx = golden_section(objective, lo, hi, bracket_tol)
    fi = objective(curve.thetas[i])
    if fi <= fx:
        x, fx = curve.thetas[i], fi
    return x % 1.0, fx


def min_distance(curve: CurveSample, params=None, bracket_tol=1e-12, depth=None):
    """Minimum of the curve over the circle and where it is attained.

    The grid minimum is refined by golden-section search between its grid
    neighbours using fresh pullbacks.
    """
    params = params or curve.params
    if np.all(curve.psi == curve.psi[0]) and np.all(curve.dpsi_dtheta == 0.0):
        return float(curve.psi[0]), float(curve.thetas[0])
    i = int(np.argmin(curve.psi))
    d = int(curve.depth[i]) if depth is None else int(depth)
    theta, value = _refine(
        curve, i, lambda t: pullback_value(t, d, params).psi, bracket_tol
    )
    return float(value), float(theta)


def sup_derivative(curve: CurveSample, params=None, bracket_tol=1e-12, depth=None):
    """Largest ``|dpsi/dtheta|`` with golden-section refinement at the grid argmax."""
    params = params or curve.params
    mag = np.abs(curve.dpsi_dtheta)
    i = int(np.argmax(mag))
    if mag[i] == 0.0:
        return 0.0, float(curve.thetas[i])
    d = int(curve.depth[i]) if depth is None else int(depth)
    theta, value = _refine(
        curve, i, lambda t: -abs(pullback_value(t, d, params).dpsi_dtheta), bracket_tol
    )
    return float(-value), float(theta)


def invariance_defect(curve: CurveSample, params=None):
    """``|psi(theta + omega) - c(theta) p(psi(theta))|`` at each grid angle.

    The image angle is evaluated by a fresh pullback one step deeper.
    """
    params = params or curve.params
    w_hi, w_lo = params.omega.hi, params.omega.lo
    out = np.empty(len(curve))
    for i, (th, psi) in enumerate(zip(curve.thetas, curve.psi)):
        c = forcing(th, params.alpha, params.beta, params.lam)[0]
        nxt = pullback_value(theta_at(th, 1.0, w_hi, w_lo), int(curve.depth[i]) + 1, params)
        out[i] = abs(nxt.psi - c * psi * (1.0 - psi))
    return out
