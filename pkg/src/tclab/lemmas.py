"""Grid and orbit checks of the quantitative estimates behind the analysis.

Each check returns a ``LemmaReport`` whose ``worst_margin`` is the smallest
slack seen over the sampled hypothesis set (positive means the inequality
held everywhere it was tested). Margins are normalised to be dimensionless
where the bound has a natural scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.optimize import brentq

from .asymptotics import compute_M_C, scale_constants
from .circle import circle_dist, theta_at
from .critical import find_alpha_c
from .diophantine import RotationNumber
from .dynamics import (
    RegionConstants, SystemParams, alpha_window, forcing, forcing_grid,
)
from .errors import NonePass, NoSignChange

BETAS = (0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 1.0)
PEAK_WIDTH_BETAS = (0.5, 0.625, 0.75, 0.875, 0.99, 1.0)
PEAK_WIDTH_K = range(5, 61)  # deeper levels fall below double resolution of c
APPENDIX_BETAS = (0.5, 0.9, 1.0)
APPENDIX_X0 = tuple(10.0**-k for k in range(3, 13))
DECAY_EXPONENT = 0.1
GOOD_LO, GOOD_HI = 0.01, 0.99
MULTIPLIER_BAND = (0.008, 0.04)
CALIBRATION_CANDIDATES = (1e4, 1e5, 1e6, 1e7)


@dataclass
class VerifierGrid:
    theta_1d: int = 10**6
    theta_2d: int = 10**4
    x_2d: int = 10**3
    orbit_thetas: int = 10**4
    spot_samples: int = 10**4
    seed: int = 0

    @classmethod
    def scaled(cls, theta_1d, seed=0):
        """Grid sizes derived from a single 1-D resolution."""
        t2 = max(100, theta_1d // 100)
        return cls(theta_1d, t2, max(100, min(1000, theta_1d // 1000)), t2,
                   max(1000, t2), seed)


@dataclass
class LemmaReport:
    lemma_id: str
    passed: bool
    worst_margin: float
    worst_witness: dict
    samples: int
    note: str = ""

    def row(self):
        return {
            "lemma_id": self.lemma_id,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "samples": self.samples,
            "worst_witness": self.worst_witness,
            "note": self.note,
        }


def _report(lemma_id, margins, witnesses, note=""):
    """Collapse per-sample margins into a report (``witnesses`` is a callable)."""
    margins = np.asarray(margins, dtype=float).ravel()
    if margins.size == 0:
        return LemmaReport(lemma_id, True, math.inf, {}, 0,
                           note or "no admissible samples at these parameters")
    i = int(np.argmin(margins))
    worst = float(margins[i])
    return LemmaReport(lemma_id, bool(worst >= 0.0), worst, witnesses(i),
                       int(margins.size), note)


def _merge(lemma_id, parts, note=""):
    """Combine several ``(margin, witness, samples)`` partial results."""
    parts = [p for p in parts if p[2] > 0]
    if not parts:
        return LemmaReport(lemma_id, True, math.inf, {}, 0,
                           note or "no admissible samples at these parameters")
    worst = min(parts, key=lambda p: p[0])
    total = sum(p[2] for p in parts)
    return LemmaReport(lemma_id, bool(worst[0] >= 0.0), float(worst[0]), worst[1], total, note)


# -- sets --------------------------------------------------------------------


class Regions:
    """Peak neighbourhoods and windows for one parameter set."""

    def __init__(self, params: SystemParams):
        self.params = params
        self.rc = RegionConstants.from_lambda(params.lam, params.omega.tau)
        self.h = self.rc.peak_halfwidth
        self.w = params.omega.value

    def outside_peaks(self, thetas):
        d0 = np.abs((thetas + 0.5) % 1.0 - 0.5)
        dw = np.abs((thetas - self.w + 0.5) % 1.0 - 0.5)
        return (d0 > self.h) & (dw > self.h)

    def theta_grid(self, n):
        """Uniform grid with the boundaries of both peak neighbourhoods added."""
        eps = 1e-12
        h, w = self.h, self.w
        edges = [h + eps, -h - eps, w + h + eps, w - h - eps, h - eps, -h + eps,
                 w + h - eps, w - h + eps, 0.0, w, self.params.alpha]
        return np.mod(np.concatenate([np.arange(n) / n, edges]), 1.0)

    def I0_grid(self, n):
        return np.mod(np.linspace(-self.h, self.h, n), 1.0)

    def peak_set(self, level_drop, beta):
        """``{c >= top*(1 - level_drop)}`` inside the neighbourhood of omega, as (lo, hi).

        The profile is unimodal around ``alpha`` there, so the set is an
        interval found by root bracketing. Returns None when empty.
        """
        p = self.params.with_beta(beta)
        a, lam = p.alpha, p.lam
        top = 1.5 + 2.5 * beta
        level = top * (1.0 - level_drop)

        def f(t):
            return forcing(t, a, beta, lam)[0] - level

        lo_edge, hi_edge = self.w - self.h, self.w + self.h
        if not lo_edge <= a <= hi_edge or f(a) < 0.0:
            return None
        lo = lo_edge if f(lo_edge) >= 0.0 else brentq(f, lo_edge, a, xtol=1e-16, rtol=1e-15)
        hi = hi_edge if f(hi_edge) >= 0.0 else brentq(f, a, hi_edge, xtol=1e-16, rtol=1e-15)
        return lo, hi


# -- forcing profile ---------------------------------------------------------


def verify_forcing_bounds(params: SystemParams, grid: VerifierGrid = None):
    """Flatness away from the peaks, peak width, and slope on the rising flank."""
    grid = grid or VerifierGrid()
    reg = Regions(params)
    lam = params.lam
    bound = lam**-0.5

    # flat outside both peak neighbourhoods
    th = reg.theta_grid(grid.theta_1d)
    th = th[reg.outside_peaks(th)]
    parts = []
    for beta in BETAS:
        c, ct, cb = forcing_grid(th, params.with_beta(beta))
        vals = np.stack([np.abs(c - 1.5), np.abs(ct), np.abs(cb)])
        worst = vals.max(axis=0)
        if worst.size:
            i = int(np.argmax(worst))
            which = ("c - 3/2", "dc/dtheta", "dc/dbeta")[int(np.argmax(vals[:, i]))]
            parts.append((1.0 - worst[i] / bound,
                          {"theta": float(th[i]), "beta": beta, "quantity": which},
                          worst.size))
    flat = _merge("forcing_flat_outside_peaks", parts,
                  "" if th.size else "peak neighbourhoods cover the circle")

    # super-level sets of the alpha peak are narrow
    parts = []
    for beta in PEAK_WIDTH_BETAS:
        for k in PEAK_WIDTH_K:
            drop = 0.8 ** (2 * k)
            span = reg.peak_set(drop, beta)
            if span is None:
                continue
            allowed = math.sqrt(drop) * lam**-0.25
            reach = max(params.alpha - span[0], span[1] - params.alpha)
            parts.append((1.0 - reach / allowed,
                          {"beta": beta, "K": k, "delta": drop, "reach": reach},
                          1))
    width = _merge("forcing_peak_width", parts,
                   "beta restricted to [1/2, 1]; drop levels (4/5)^(2K), K = 5..60")

    # slope on the rising flank of the peak at 0
    lo, hi = -0.5 * lam**-0.4, -2.0 * lam ** (-2.0 / 3.0)
    parts = []
    if lo < hi:
        flank = np.mod(np.linspace(lo, hi, grid.theta_1d), 1.0)
        for beta in BETAS:
            if beta == 0.0:
                continue
            ct = forcing_grid(flank, params.with_beta(beta))[1]
            m = np.minimum(ct / (beta * lam ** (1.0 / 6.0)) - 1.0, 1.0 - ct / (beta * lam))
            i = int(np.argmin(m))
            parts.append((float(m[i]), {"theta": float(flank[i]), "beta": beta,
                                        "dc_dtheta": float(ct[i])}, m.size))
    slope = _merge("forcing_flank_slope", parts,
                   "checked on theta + omega in the alpha window; beta = 0 is the "
                   "degenerate 0 <= 0 <= 0 case")
    return flat, width, slope


# -- contraction region ------------------------------------------------------


def _x_grid(lo, hi, n, extra=()):
    return np.unique(np.concatenate([np.linspace(lo, hi, n), np.asarray(extra, float)]))


def _two_d(params, thetas, xs, fn, betas=BETAS, chunk=500):
    """Evaluate ``fn(c, x) -> margins`` over thetas x xs x betas in chunks."""
    best = (math.inf, {}, 0)
    count = 0
    for beta in betas:
        p = params.with_beta(beta)
        for s in range(0, len(thetas), chunk):
            th = thetas[s:s + chunk]
            c = forcing_grid(th, p)[0][:, None]
            m = fn(c, xs[None, :], th, p)
            count += m.size
            i = np.unravel_index(int(np.argmin(m)), m.shape)
            if m[i] < best[0]:
                best = (float(m[i]), {"theta": float(th[i[0]]), "x0": float(xs[i[1]]),
                                      "beta": beta}, 0)
    return best[0], best[1], count


def _interval_image(lo, hi, c_lo, c_hi):
    """Range of ``c * x(1-x)`` over ``x in [lo, hi]`` and ``c in [c_lo, c_hi]``."""
    plo, phi = lo * (1.0 - lo), hi * (1.0 - hi)
    pmin = np.minimum(plo, phi)
    pmax = np.where((lo <= 0.5) & (hi >= 0.5), 0.25, np.maximum(plo, phi))
    return c_lo * pmin, c_hi * pmax


def admissible_runs(params, length, n_thetas):
    """Start angles whose next ``length`` iterates all avoid the peak neighbourhoods."""
    reg = Regions(params)
    th = np.arange(n_thetas) / n_thetas
    ok = np.ones(n_thetas, dtype=bool)
    for k in range(length):
        tk = np.array([theta_at(t, float(k), params.omega.hi, params.omega.lo) for t in th[ok]])
        keep = reg.outside_peaks(tk)
        idx = np.nonzero(ok)[0]
        ok[idx[~keep]] = False
        if not ok.any():
            break
    return th[ok]


def verify_contraction_region(params: SystemParams, grid: VerifierGrid = None):
    grid = grid or VerifierGrid()
    reg = Regions(params)
    rc = reg.rc
    th_all = reg.theta_grid(grid.theta_2d)
    th_out = th_all[reg.outside_peaks(th_all)]

    # one step from C stays in C with multiplier below 3/5
    xs = _x_grid(rc.contract_lo, rc.contract_hi, grid.x_2d)

    def in_c(c, x, th, p):
        x1 = c * x * (1.0 - x)
        return np.minimum(np.minimum(x1 - rc.contract_lo, rc.contract_hi - x1),
                          0.6 - np.abs(c * (1.0 - 2.0 * x)))

    m, wit, n = _two_d(params, th_out, xs, in_c)
    bullet1 = _merge("contraction_in_C", [(m, wit, n)])

    # twenty steps away from the peaks bring [1/100, 99/100] into C
    c_out = 1.5
    if th_out.size:
        c_out = max(float(forcing_grid(th_out, params.with_beta(1.0))[0].max()),
                    1.5 + params.lam**-0.5)
    edges = np.linspace(GOOD_LO, GOOD_HI, grid.theta_2d + 1)
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    for _ in range(20):
        lo, hi = _interval_image(lo, hi, 1.5, c_out)
    env = np.minimum(lo - rc.contract_lo, rc.contract_hi - hi)
    i = int(np.argmin(env))
    parts = [(float(env[i] / (rc.contract_hi - rc.contract_lo)),
              {"cell": [float(edges[i]), float(edges[i + 1])], "c_range": [1.5, c_out]},
              env.size)]
    runs = admissible_runs(params, 20, grid.orbit_thetas)
    note = (f"interval envelope over {env.size} cells with c in [1.5, {c_out:.6f}]; "
            f"{runs.size} start angles admit a 20-step run outside the peaks")
    if runs.size:
        xs20 = _x_grid(GOOD_LO, GOOD_HI, 200)
        for beta in BETAS:
            p = params.with_beta(beta)
            for t in runs:
                x = xs20.copy()
                for k in range(20):
                    tk = theta_at(t, float(k), p.omega.hi, p.omega.lo)
                    x = forcing(tk, p.alpha, beta, p.lam)[0] * x * (1.0 - x)
                mm = np.minimum(x - rc.contract_lo, rc.contract_hi - x)
                j = int(np.argmin(mm))
                parts.append((float(mm[j] / (rc.contract_hi - rc.contract_lo)),
                              {"theta": float(t), "x0": float(xs20[j]), "beta": beta},
                              mm.size))
    bullet2 = _merge("twenty_step_return", parts, note)

    # one step away from the peaks maps [1/100, 99/100] into (1/100, 2/5)
    xs = _x_grid(GOOD_LO, GOOD_HI, grid.x_2d, [0.5])

    def away(c, x, th, p):
        x1 = c * x * (1.0 - x)
        return np.minimum(x1 - GOOD_LO, 0.4 - x1)

    m, wit, n = _two_d(params, th_out, xs, away)
    bullet3 = _merge("one_step_away_from_peaks", [(m, wit, n)])

    # growth by at least 5/4 below 1/10, anywhere on the circle
    xs = _x_grid(0.0, 0.1, grid.x_2d)

    def ascent(c, x, th, p):
        return c * (1.0 - x) - 1.25

    m, wit, n = _two_d(params, th_all, xs, ascent)
    bullet4 = _merge("ascent_from_bottom", [(m, wit, n)],
                     "margin is c(1 - x0) - 5/4, i.e. x1/x0 - 5/4 for x0 > 0")
    return bullet1, bullet2, bullet3, bullet4


# -- entry and exit ----------------------------------------------------------


@njit(cache=True, nogil=True)
def _ascent_time(theta0, x0, alpha, beta, lam, w_hi, w_lo, cap):
    x = x0
    for k in range(1, cap + 1):
        th = theta_at(theta0, float(k - 1), w_hi, w_lo)
        c = forcing(th, alpha, beta, lam)[0]
        x = c * x * (1.0 - x)
        if x >= 0.01:
            return k
    return -1


def verify_entry_exit(params: SystemParams, grid: VerifierGrid = None):
    grid = grid or VerifierGrid()
    reg = Regions(params)
    rc = reg.rc
    w_hi, w_lo = params.omega.hi, params.omega.lo
    th_all = reg.theta_grid(grid.theta_2d)

    # two steps after leaving the edges of [0, 1]
    tiny = [1e-300, 1e-12, 1e-6, 0.01 * (1 - 1e-12), 0.99 * (1 + 1e-12), 1 - 1e-12]
    xm1 = np.concatenate([_x_grid(0.0, 0.01, grid.x_2d // 2)[1:-1],
                          _x_grid(0.99, 1.0, grid.x_2d // 2)[1:-1], tiny])

    def entry(c, x, th, p):
        x0 = c * x * (1.0 - x)
        th1 = np.mod(th + p.omega.value, 1.0)[:, None]
        th2 = np.mod(th + 2.0 * p.omega.value, 1.0)[:, None]
        c1 = forcing_grid(th1, p)[0]
        c2 = forcing_grid(th2, p)[0]
        x1 = c1 * x0 * (1.0 - x0)
        x2 = c2 * x1 * (1.0 - x1)
        m = np.minimum(x2 - GOOD_LO, GOOD_HI - x2)
        return np.where(x0 >= GOOD_LO, m, np.inf)

    m, wit, n = _two_d(params, th_all, xm1, entry)
    if "x0" in wit:
        wit["x_minus_1"] = wit.pop("x0")
    entry_report = _merge("two_steps_after_entry", [(m, wit, n)],
                          "x0 = c p(x_-1) >= 1/100 filter applied")

    # starting in C on the first peak
    th_i0 = np.concatenate([reg.I0_grid(grid.theta_2d), [0.0]])
    xs = _x_grid(rc.contract_lo, rc.contract_hi, grid.x_2d)

    def first_peak(c, x, th, p):
        x1 = c * x * (1.0 - x)
        c1 = forcing_grid(np.mod(th + p.omega.value, 1.0)[:, None], p)[0]
        x2 = c1 * x1 * (1.0 - x1)
        return np.minimum(np.minimum(x1 - 0.3, 0.99 - x1), x2 - 0.01)

    m, wit, n = _two_d(params, th_i0, xs, first_peak)
    peak_report = _merge("first_peak_does_little", [(m, wit, n)])

    # time to climb back above 1/100
    parts = []
    ths = reg.theta_grid(grid.orbit_thetas)
    for beta in BETAS:
        p = params.with_beta(beta)
        for x0 in APPENDIX_X0 + (0.01 * (1 - 1e-9),):
            bound = math.log(1.0 / (20.0 * x0)) / math.log(1.25)
            ts = np.array([_ascent_time(t, x0, p.alpha, beta, p.lam, w_hi, w_lo, 10_000)
                           for t in ths])
            worst = int(np.argmax(ts))
            parts.append((bound - ts[worst], {"theta": float(ths[worst]), "x0": x0,
                                              "beta": beta, "T": int(ts[worst]),
                                              "bound": bound}, ts.size))
    ascent_report = _merge("time_of_ascent", parts, "margin = bound - measured T")
    return entry_report, peak_report, ascent_report


# -- appendix estimates ------------------------------------------------------


@njit(cache=True, nogil=True)
def _bottom_passage(theta0, x0, alpha, beta, lam, w_hi, w_lo, cap):
    """Quantities of the orbit from ``x0 < 1/100`` until it first reaches 1/100.

    Returns ``(N, ratio, scaled_product, derivative_sum)`` where N is the
    last index with ``x_N < 1/100``.
    """
    x = x0
    ratio = 1.0
    logprod = 0.0
    dsum = 0.0
    last = 0.0
    for k in range(cap):
        th = theta_at(theta0, float(k), w_hi, w_lo)
        c, ct, cb = forcing(th, alpha, beta, lam)
        mult = c * (1.0 - 2.0 * x)
        ratio *= (1.0 - 2.0 * x) / (1.0 - x)
        logprod += math.log(abs(mult))
        last = ct * x * (1.0 - x)
        dsum = last + mult * dsum
        x = c * x * (1.0 - x)
        if x >= 0.01:
            return k, ratio, math.exp(logprod + math.log(x0)), abs(dsum - last)
    return -1, ratio, 0.0, 0.0


def appendix_table(params: SystemParams, x0_list=APPENDIX_X0, n_thetas=10**4, betas=APPENDIX_BETAS):
    """Per (beta, x0): worst ratio, band values and the sup derivative sum."""
    w_hi, w_lo = params.omega.hi, params.omega.lo
    ths = np.arange(n_thetas) / n_thetas
    rows = []
    for beta in betas:
        p = params.with_beta(beta)
        for x0 in x0_list:
            res = np.array([_bottom_passage(t, x0, p.alpha, beta, p.lam, w_hi, w_lo, 10_000)
                            for t in ths])
            rows.append({
                "beta": beta, "x0": x0,
                "ratio_min": float(res[:, 1].min()), "ratio_max": float(res[:, 1].max()),
                "ratio_argmin": float(ths[int(np.argmin(res[:, 1]))]),
                "band_min": float(res[:, 2].min()), "band_max": float(res[:, 2].max()),
                "band_argmin": float(ths[int(np.argmin(res[:, 2]))]),
                "band_argmax": float(ths[int(np.argmax(res[:, 2]))]),
                "sum_sup": float(res[:, 3].max()),
                "sum_argmax": float(ths[int(np.argmax(res[:, 3]))]),
                "steps_max": int(res[:, 0].max()),
            })
    return rows


def verify_appendix(params: SystemParams, x0_list=APPENDIX_X0, grid: VerifierGrid = None):
    grid = grid or VerifierGrid()
    x0_list = tuple(sorted(x0_list, reverse=True))
    rows = appendix_table(params, x0_list, grid.orbit_thetas)

    parts = []
    for r in rows:
        m = min(r["ratio_min"] - 0.8, 1.0 - r["ratio_max"])
        parts.append((m, {"beta": r["beta"], "x0": r["x0"], "theta": r["ratio_argmin"],
                          "ratio": r["ratio_min"]}, grid.orbit_thetas))
    ratio = _merge("product_ratio", parts)

    lo, hi = MULTIPLIER_BAND
    parts = []
    for r in rows:
        m = min(r["band_min"] / lo - 1.0, 1.0 - r["band_max"] / hi)
        parts.append((m, {"beta": r["beta"], "x0": r["x0"], "band": [r["band_min"], r["band_max"]]},
                      grid.orbit_thetas))
    band = _merge("multiplier_band", parts, f"x0 * product held in [{lo}, {hi}]")

    parts = []
    for beta in sorted({r["beta"] for r in rows}):
        seq = [r["sum_sup"] * r["x0"] ** DECAY_EXPONENT for r in rows if r["beta"] == beta]
        for a, b, r in zip(seq, seq[1:], [r for r in rows if r["beta"] == beta][1:]):
            parts.append((1.0 - b / a, {"beta": beta, "x0": r["x0"], "previous": a,
                                         "value": b}, 1))
    decay = _merge("derivative_sum_decay", parts,
                   "sup over start angles of the summed term times x0^0.1; "
                   "must shrink as x0 decreases")
    return ratio, band, decay


# -- sampled orbit checks ----------------------------------------------------


@njit(cache=True, nogil=True)
def _first_good(theta0, x0, k_min, k_max, alpha, beta, lam, w_hi, w_lo):
    x = x0
    for k in range(1, k_max + 1):
        th = theta_at(theta0, float(k - 1), w_hi, w_lo)
        c = forcing(th, alpha, beta, lam)[0]
        x = c * x * (1.0 - x)
        if k >= k_min and GOOD_LO <= x <= GOOD_HI:
            return k
    return -1


def _sample_outside(rng, lo, hi, hole):
    """Uniform point of ``[lo, hi]`` minus the interval ``hole`` (None if empty)."""
    if hole is None:
        return rng.uniform(lo, hi)
    a, b = max(lo, hole[0]), min(hi, hole[1])
    if a >= b:
        return rng.uniform(lo, hi)
    left, right = a - lo, hi - b
    if left + right <= 0.0:
        return None
    u = rng.uniform(0.0, left + right)
    return lo + u if u < left else b + (u - left)


def _return_check(lemma_id, params, grid, bad):
    rng = np.random.default_rng([grid.seed, 7 if bad else 3])
    reg = Regions(params)
    w, h = reg.w, reg.h
    w_hi, w_lo = params.omega.hi, params.omega.lo
    margins, wits = [], []
    for s in range(grid.spot_samples):
        beta = float(rng.uniform(0.0, 1.0)) if s % 10 else (1.0 - 2.0**-17)
        if not bad and s % 10 == 1:
            beta = 1.0
        M = int(rng.integers(10, 41))
        span = reg.peak_set(0.8**M, beta)
        case = s % 3
        if bad:
            if span is None:
                continue
            k_max = compute_M_C(beta)
            if case == 0:
                th0 = rng.uniform(span[0], span[1]) - 2.0 * w
            elif case == 1:
                th0 = rng.uniform(-h, h)
            else:
                th0 = rng.uniform(span[0], span[1])
        else:
            k_max = M - 7
            shift = (-2.0 * w, -w, 0.0)[case]
            centre = (-w, 0.0, w)[case]
            hole = None if span is None else (span[0] + shift, span[1] + shift)
            th0 = _sample_outside(rng, centre - h, centre + h, hole)
            if th0 is None:
                continue
        k_min = 3 - case
        x_hi = 0.4 if (case == 1 and not bad) else GOOD_HI
        x0 = 0.5 if s % 7 == 0 and x_hi > 0.5 else float(rng.uniform(GOOD_LO, x_hi))
        th0 %= 1.0
        k = _first_good(th0, x0, k_min, k_max, params.alpha, beta, params.lam, w_hi, w_lo)
        margins.append(float(k_max - k) if k > 0 else -1.0)
        wits.append({"theta": th0, "x0": x0, "beta": beta, "M": M, "k": int(k),
                     "k_max": int(k_max)})
    return _report(lemma_id, margins, lambda i: wits[i],
                   "margin = allowed steps minus first return step")


@njit(cache=True, nogil=True)
def _derivative_bound_sample(theta0, x0, T, window, alpha, beta, lam, w_hi, w_lo, small):
    """Returns (admissible, |dx/dtheta|, |dx/dbeta|) at step T + 1."""
    logm = np.empty(T + 1)
    x = x0
    dt = 0.0
    db = 0.0
    admissible = True
    for k in range(T + 1):
        th = theta_at(theta0, float(k), w_hi, w_lo)
        c, ct, cb = forcing(th, alpha, beta, lam)
        if k >= T - window and (abs(ct) >= small or abs(cb) >= small):
            admissible = False
        mult = c * (1.0 - 2.0 * x)
        logm[k] = math.log(abs(mult)) if mult != 0.0 else -745.0
        p = x * (1.0 - x)
        dt = ct * p + mult * dt
        db = cb * p + mult * db
        x = c * p
    tail = 0.0
    half_log = 0.5 * math.log(0.6)
    for k in range(T, -1, -1):
        tail += logm[k]
        if tail >= (T - k + 1) * half_log:
            admissible = False
            break
    return admissible, abs(dt), abs(db)


def verify_derivative_bounds(params: SystemParams, grid: VerifierGrid = None):
    grid = grid or VerifierGrid()
    rng = np.random.default_rng([grid.seed, 5])
    lam = params.lam
    window = math.ceil(10.0 * math.log(lam))
    bound = lam**-0.25
    margins, wits = [], []
    for _ in range(grid.spot_samples):
        beta = float(rng.uniform(0.0, 1.0))
        th0 = float(rng.random())
        x0 = float(rng.random())
        T = window + 1 + int(rng.integers(0, 200))
        ok, dt, db = _derivative_bound_sample(th0, x0, T, window, params.alpha, beta, lam,
                                              params.omega.hi, params.omega.lo, lam**-0.5)
        if ok:
            margins.append(1.0 - max(dt, db) / bound)
            wits.append({"theta": th0, "x0": x0, "beta": beta, "T": T})
    return _report("derivative_bounds", margins, lambda i: wits[i],
                   f"{len(margins)} of {grid.spot_samples} sampled orbits met the hypotheses "
                   f"(flat forcing over the last {window} steps)")


def verify_local_products(params: SystemParams, grid: VerifierGrid = None, m=0):
    """Products of ``|c p'|`` along runs that avoid the next zoom interval."""
    grid = grid or VerifierGrid()
    rng = np.random.default_rng([grid.seed, 11])
    consts = scale_constants(params.lam, params.omega.tau, n_max=m + 2)
    width = 0.8 ** consts.levels[m]
    centre = params.alpha - params.omega.value
    K_m, M0 = consts.levels[m], max(consts.return_times[0], 1)
    log_pref = 4 * K_m * math.log(4.0)
    rate = (1.0 - 1.0 / M0) * 0.5 * math.log(0.6)
    rc = RegionConstants.from_lambda(params.lam, params.omega.tau)
    margins, wits = [], []
    for _ in range(grid.spot_samples):
        beta = float(rng.uniform(0.0, 1.0))
        p = params.with_beta(beta)
        th0 = float(rng.random())
        x = float(rng.uniform(rc.contract_lo, rc.contract_hi))
        logs = []
        for i in range(2000):
            th = theta_at(th0, float(i), p.omega.hi, p.omega.lo)
            if circle_dist(th, centre) <= 0.5 * width:
                break
            c = forcing(th, p.alpha, beta, p.lam)[0]
            logs.append(math.log(max(abs(c * (1.0 - 2.0 * x)), 1e-300)))
            x = c * x * (1.0 - x)
        N = len(logs) - 1
        if N < 1:
            continue
        cum = np.concatenate([[0.0], np.cumsum(logs)])
        worst = math.inf
        for j in range(N):
            spans = np.arange(j + 1, N + 1)
            slack = log_pref + rate * (spans - j) - (cum[spans] - cum[j])
            worst = min(worst, float(slack.min()))
        margins.append(worst)
        wits.append({"theta": th0, "beta": beta, "N": N})
    return _report("local_product_control", margins, lambda i: wits[i],
                   f"m = {m}, K_m = {K_m}, zoom width {width:.3g}; margin in log units")


# -- critical parameter ------------------------------------------------------


def verify_alpha_window(lam, omega, alpha_c=None, threads=None):
    """The collision parameter exists and lies in its window at this lambda."""
    lo, hi = alpha_window(lam, omega.value)
    if lo > hi:
        return LemmaReport("alpha_c_in_window", False, -1.0, {"window": [lo, hi]}, 1,
                           "alpha window is empty at this lambda"), None
    if alpha_c is None:
        try:
            alpha_c = find_alpha_c(lam, omega=omega, threads=threads).alpha_c
        except NoSignChange as exc:
            return LemmaReport("alpha_c_in_window", False, -1.0,
                               {"window": [lo, hi]}, 1, str(exc)), None
    span = hi - lo
    margin = min(alpha_c - lo, hi - alpha_c) / span if span > 0 else -1.0
    return LemmaReport("alpha_c_in_window", bool(margin >= 0.0), float(margin),
                       {"alpha_c": alpha_c, "window": [lo, hi]}, 1), alpha_c


# -- driver ------------------------------------------------------------------


def default_alpha(lam, omega):
    lo, hi = alpha_window(lam, omega.value)
    return (0.5 * (lo + hi)) % 1.0


def verify_all(lam, omega: RotationNumber = None, alpha=None, grid: VerifierGrid = None,
               threads=None):
    """Every check at one lambda. ``alpha=None`` locates the collision parameter."""
    omega = omega or RotationNumber.golden()
    grid = grid or VerifierGrid()
    chain, alpha_c = verify_alpha_window(lam, omega, alpha, threads)
    a = alpha_c if alpha_c is not None else default_alpha(lam, omega)
    params = SystemParams(alpha=a % 1.0, beta=1.0, lam=float(lam), omega=omega)
    reports = [chain]
    reports += verify_forcing_bounds(params, grid)
    reports += verify_contraction_region(params, grid)
    reports += verify_entry_exit(params, grid)
    reports += verify_appendix(params, grid=grid)
    reports.append(verify_derivative_bounds(params, grid))
    reports.append(_return_check("good_return_bound", params, grid, bad=False))
    reports.append(_return_check("bad_return_bound", params, grid, bad=True))
    reports.append(verify_local_products(params, grid))
    return reports


@dataclass
class Calibration:
    lam: float
    table: dict = field(default_factory=dict)  # lambda -> list of LemmaReport


def calibrate_lambda(candidates=CALIBRATION_CANDIDATES, omega=None, grid=None, threads=None):
    """Smallest candidate at which every check passes."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no lambda candidates given")
    if candidates != sorted(candidates):
        raise ValueError("lambda candidates must be sorted ascending")
    table = {}
    for lam in candidates:
        reports = verify_all(lam, omega, grid=grid, threads=threads)
        table[lam] = reports
        if all(r.passed for r in reports):
            return Calibration(lam, table)
    failed = [r.lemma_id for r in table[candidates[-1]] if not r.passed]
    err = NonePass(f"no candidate passed; largest fails {', '.join(failed)}")
    err.table = table
    raise err
