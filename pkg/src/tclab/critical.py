"""Locating the collision parameter alpha_c where 1/2 -> 1 -> 0 at beta = 1."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import bisect

from .attractor import _pullback_one, min_distance, pullback_value, sample_orbit_window
from .circle import theta_at
from .diophantine import RotationNumber
from .dynamics import SEED_HIGH, SEED_LOW, SystemParams, alpha_window
from .errors import ChainBroken, NoSignChange
from .parallel import chunks, pmap, resolve_threads

DEFAULT_DEPTH = 400
SCAN_POINTS = 4096
SCAN_CAP = 2**20
# chain tolerances: psi(a+w) = 1 - 4*defect**2 and psi(a+2w) ~ 1.5*(1 - psi(a+w))
DEFECT_TOL = 1e-10
TOP_TOL = 1e-6
BOTTOM_TOL = 4e-6
NEAR_ONE_BETA = 1.0 - 1e-3
PERTURBATION = 1e-4


@dataclass(frozen=True)
class CriticalResult:
    alpha_c: float
    defect: float
    chain_values: tuple
    bracket_width: float
    depth: int
    lam: float
    window: tuple
    roots_found: int = 1

    def to_dict(self):
        return {
            "alpha_c": self.alpha_c,
            "defect": self.defect,
            "chain_values": list(self.chain_values),
            "bracket_width": self.bracket_width,
            "depth": self.depth,
            "lambda": self.lam,
            "A0": list(self.window),
            "roots_found": self.roots_found,
        }


@dataclass(frozen=True)
class ChainReport:
    passed: bool
    chain_values: tuple
    chain_values_double_depth: tuple
    delta_near_one: float
    perturbed_bottom: float
    failures: tuple = ()

    def to_dict(self):
        return {
            "passed": self.passed,
            "chain_values": list(self.chain_values),
            "chain_values_double_depth": list(self.chain_values_double_depth),
            "delta_at_beta_0.999": self.delta_near_one,
            "perturbed_bottom": self.perturbed_bottom,
            "failures": list(self.failures),
        }


@njit(cache=True, nogil=True)
def _defect_grid(alphas, depth, lam, w_hi, w_lo, out):
    for i in range(alphas.shape[0]):
        a = alphas[i]
        out[i] = _pullback_one(a, depth, a, 1.0, lam, w_hi, w_lo,
                               1.0 / 3.0 - 0.01, 1.0 / 3.0 + 0.01)[0] - 0.5


def _params(alpha, lam, omega, beta=1.0):
    return SystemParams(alpha=float(alpha), beta=beta, lam=float(lam), omega=omega)


def chain_defect(alpha, depth, lam, omega: RotationNumber) -> float:
    """``psi(alpha) - 1/2`` for the depth-limited beta = 1 curve at theta = alpha."""
    psi = _pullback_one(float(alpha), int(depth), float(alpha), 1.0, float(lam),
                        omega.hi, omega.lo, SEED_LOW, SEED_HIGH)[0]
    return psi - 0.5


def defect_scan(alphas, depth, lam, omega, threads=None):
    alphas = np.ascontiguousarray(alphas, dtype=float)
    out = np.empty(len(alphas))

    def run(span):
        lo, hi = span
        _defect_grid(alphas[lo:hi], int(depth), float(lam), omega.hi, omega.lo, out[lo:hi])

    pmap(run, chunks(len(alphas), 4 * resolve_threads(threads)), threads)
    return out


def chain_values(alpha, depth, lam, omega, beta=1.0):
    """Curve values at ``alpha``, ``alpha + omega``, ``alpha + 2*omega``."""
    params = _params(alpha, lam, omega, beta)
    vals = []
    for k in range(3):
        th = theta_at(float(alpha), float(k), omega.hi, omega.lo)
        vals.append(pullback_value(th, depth + k, params).psi)
    return tuple(vals)


def _sign_changes(values):
    s = np.sign(values)
    return np.nonzero(s[:-1] * s[1:] <= 0)[0]


def find_alpha_c(lam, tol_alpha=1e-14, depth=DEFAULT_DEPTH, omega=None,
                 scan_points=SCAN_POINTS, threads=None) -> CriticalResult:
    """Root of the chain defect inside the alpha window, refined by bisection.

    The window is scanned on a uniform grid, doubled until a sign change
    shows up. Every bracketed root is refined and the one sending
    ``alpha + 2*omega`` closest to zero is kept.
    """
    if tol_alpha < 1e-14:
        raise ValueError("tol_alpha must be >= 1e-14")
    omega = omega or RotationNumber.golden()
    lo, hi = alpha_window(lam, omega.value)
    if lo > hi:
        raise NoSignChange(f"alpha window [{lo!r}, {hi!r}] is empty at lambda {lam!r}")
    n = int(scan_points)
    while True:
        alphas = np.linspace(lo, hi, n + 1)
        values = defect_scan(alphas, depth, lam, omega, threads)
        idx = _sign_changes(values)
        if len(idx) or 2 * n > SCAN_CAP:
            break
        n *= 2
    if len(idx) == 0:
        raise NoSignChange(
            f"chain defect keeps one sign over [{lo!r}, {hi!r}] "
            f"({n + 1} points, depth {depth}); lambda or depth too small"
        )

    def defect(a):
        return chain_defect(a, depth, lam, omega)

    best = None
    for i in idx:
        a, b = alphas[i], alphas[i + 1]
        if values[i] == 0.0:
            root = a
        elif values[i + 1] == 0.0:
            root = b
        else:
            root = bisect(defect, a, b, xtol=tol_alpha, rtol=4 * np.finfo(float).eps,
                          maxiter=200)
        vals = chain_values(root, depth, lam, omega)
        if best is None or abs(vals[2]) < abs(best[1][2]):
            best = (root, vals)
    root, vals = best
    return CriticalResult(
        alpha_c=float(root),
        defect=abs(vals[0] - 0.5),
        chain_values=vals,
        bracket_width=float(tol_alpha),
        depth=int(depth),
        lam=float(lam),
        window=(lo, hi),
        roots_found=len(idx),
    )


def verify_chain(result: CriticalResult, omega=None, strict=True) -> ChainReport:
    """Re-check the chain at doubled depth and the gap just below beta = 1."""
    omega = omega or RotationNumber.golden()
    a, lam = result.alpha_c, result.lam
    failures = []
    double = chain_values(a, 2 * result.depth, lam, omega)
    for label, vals in (("depth", result.chain_values), ("double depth", double)):
        if abs(vals[0] - 0.5) > DEFECT_TOL:
            failures.append(f"{label}: |psi(a)-1/2| = {abs(vals[0] - 0.5):.3e}")
        if vals[1] < 1.0 - TOP_TOL:
            failures.append(f"{label}: psi(a+w) = {vals[1]!r}")
        if vals[2] > BOTTOM_TOL:
            failures.append(f"{label}: psi(a+2w) = {vals[2]!r}")
    lo, hi = result.window
    if not lo <= a <= hi:
        failures.append("alpha_c outside its window")

    near = _params(a, lam, omega, NEAR_ONE_BETA)
    offsets = np.concatenate([-np.geomspace(1e-3, 1e-10, 60), [0.0],
                              np.geomspace(1e-10, 1e-3, 60)])
    window = sample_orbit_window(a, offsets, 3, near)
    delta, _ = min_distance(window, near)
    if not delta > 0.0:
        failures.append(f"beta={NEAR_ONE_BETA}: min distance {delta!r}")

    pert = a + PERTURBATION
    bottom = chain_values(pert, result.depth, lam, omega)[2]
    if not bottom > 1e3 * BOTTOM_TOL:
        failures.append(f"perturbed alpha: psi(a+2w) = {bottom!r}")

    report = ChainReport(
        passed=not failures,
        chain_values=result.chain_values,
        chain_values_double_depth=double,
        delta_near_one=delta,
        perturbed_bottom=bottom,
        failures=tuple(failures),
    )
    if strict and failures:
        raise ChainBroken("; ".join(failures))
    return report
