"""Sweeps toward beta = 1 and the fits of the distance and derivative laws."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .attractor import (
    DEFAULT_TOL, choose_depth, min_distance, sample_curve, sample_orbit_window,
    sup_derivative, t1_bound,
)
from .circle import theta_at
from .dynamics import SystemParams, forcing, lyapunov_kernel, orbit_path
from .errors import InsufficientWindow, NotConverged, VacuousScales
from .parallel import pmap

LOG_54 = math.log(1.25)
M_C_FLOOR = 10
MIN_K0 = 10
FIT_MIN_POINTS = 4
DEFAULT_J = tuple(range(7, 18))
FIT_MIN_J = 10
LYAP_STEPS = 10**6
LYAP_BURN = 10**4
LYAP_STARTS = 10
GLOBAL_GRID = 4096
WINDOW_OFFSETS = 240  # per side, log-spaced
WINDOW_SPAN = (1e-13, 1e-3)


def default_betas(js=DEFAULT_J):
    return [1.0 - 2.0**-j for j in js]


# -- diagnostic constants ----------------------------------------------------


def M_C_raw(beta) -> float:
    v = 0.375 + 0.625 * beta
    return math.log(1.0 / (150.0 * v * (1.0 - v))) / LOG_54 + 4.0


def compute_M_C(beta) -> int:
    """Return-time threshold for the contracting region, floored at 10."""
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    return max(M_C_FLOOR, math.ceil(M_C_raw(beta)))


@dataclass(frozen=True)
class ScaleConstants:
    levels: tuple  # zoom depth exponents, one per scale
    return_times: tuple
    widths: tuple  # widths[k] = (4/5)**levels[k-1], widths[0] = 2 * lam**(-1/7)
    lam: float
    tau: float

    @property
    def vacuous(self) -> bool:
        return self.levels[0] < MIN_K0


def scale_constants(lam, tau=1.0, n_max=50) -> ScaleConstants:
    """Integer scale sequences at the lower ends of their admissible ranges.

    ``K_k = ceil((5/4)**(K_{k-1}/(4 tau)))``, ``M_k = ceil((5/4)**(K_{k-1}/(2 tau)))``
    and ``|I_k| = (4/5)**K_{k-1}``; generation stops once ``|I_k|`` would
    drop below 1e-300 or after ``n_max`` steps.
    """
    levels = [int(math.floor(lam ** (1.0 / (28.0 * tau))))]
    returns = [int(math.floor(lam ** (1.0 / (14.0 * tau))))]
    widths = [2.0 * lam ** (-1.0 / 7.0)]
    for _ in range(n_max):
        prev = levels[-1]
        width = 0.8**prev
        if width < 1e-300:
            break
        exp_k = prev / (4.0 * tau) * LOG_54
        exp_m = prev / (2.0 * tau) * LOG_54
        if exp_m > 700.0:
            break
        levels.append(math.ceil(math.exp(exp_k)))
        returns.append(math.ceil(math.exp(exp_m)))
        widths.append(width)
    return ScaleConstants(tuple(levels), tuple(returns), tuple(widths), float(lam), float(tau))


def scale_index(beta, consts: ScaleConstants) -> int:
    """Smallest ``n`` with ``M_C(beta) <= 2 K_n - 2``."""
    if consts.vacuous:
        raise VacuousScales(f"K0 = {consts.levels[0]} < {MIN_K0} at lambda = {consts.lam:g}")
    m = compute_M_C(beta)
    for n, k in enumerate(consts.levels):
        if m <= 2 * k - 2:
            return n
    raise VacuousScales(f"M_C = {m} beyond the generated scales")


# -- sweep -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRecord:
    beta: float
    one_minus_beta: float
    delta: float
    argmin_theta: float
    sup_deriv: float
    argmax_theta: float
    lyapunov: float
    depth: int
    M_C: int
    T1_bound: float
    scale_index_n: int

    def row(self):
        return asdict(self)


@dataclass(frozen=True)
class DroppedRecord:
    beta: float
    reason: str


def window_offsets(n=WINDOW_OFFSETS, span=WINDOW_SPAN):
    pos = np.geomspace(span[0], span[1], n)
    return np.concatenate([-pos[::-1], [0.0], pos])


def track_length(beta) -> int:
    """How far along the orbit of the collision window to follow the curve."""
    return 3 + max(0, math.ceil(t1_bound(beta))) + 20


def max_lyapunov(params, rng, starts=LYAP_STARTS, steps=LYAP_STEPS, burn=LYAP_BURN):
    """Largest fiber exponent over ``starts`` random ``(theta0, x0)``."""
    best = -math.inf
    thetas = rng.random(starts)
    xs = rng.uniform(0.01, 0.99, starts)
    for th, x0 in zip(thetas, xs):
        total, dropped = lyapunov_kernel(float(th), float(x0), steps, burn, *params.kernel_args)
        if dropped > 1e-6 * steps:
            continue
        best = max(best, total / steps)
    return best


def measure(beta, params_base: SystemParams, tol=DEFAULT_TOL, seed=0, index=0,
            grid_n=GLOBAL_GRID, consts=None, lyap_steps=LYAP_STEPS,
            lyap_starts=LYAP_STARTS):
    """One sweep row at ``beta``; raises NotConverged when residuals miss ``tol``."""
    params = params_base.with_beta(beta)
    alpha_c = params.alpha
    depth = choose_depth(beta, tol, params)
    curve = sample_curve((grid_n, 0.5), params, tol=tol, threads=1)
    if beta > 0.0:
        window = sample_orbit_window(
            alpha_c, window_offsets(), track_length(beta), params,
            depth=depth, tol=tol, threads=1,
        )
        curve = curve.merge(window)
    if not curve.all_converged:
        worst = float(np.max(curve.residual))
        raise NotConverged(f"beta={beta!r}: worst residual {worst:.3e} > {tol:.1e}")
    delta, argmin = min_distance(curve, params)
    sup, argmax = sup_derivative(curve, params)
    rng = np.random.default_rng([int(seed), int(index)])
    lyap = max_lyapunov(params, rng, starts=lyap_starts, steps=lyap_steps)
    try:
        n = scale_index(beta, consts or scale_constants(params.lam, params.omega.tau))
    except VacuousScales:
        n = -1
    return SweepRecord(
        beta=float(beta), one_minus_beta=1.0 - float(beta), delta=delta,
        argmin_theta=argmin, sup_deriv=sup, argmax_theta=argmax, lyapunov=lyap,
        depth=depth, M_C=compute_M_C(beta), T1_bound=t1_bound(beta), scale_index_n=n,
    )


def sweep(beta_list, alpha_c, params_base: SystemParams, tol=DEFAULT_TOL, seed=0,
          threads=None, **kw):
    """Measure every beta (ascending); returns ``(records, dropped)``.

    Records are computed independently, one per worker, each with its own
    seed stream, so the output does not depend on the thread count.
    """
    betas = sorted(float(b) for b in beta_list)
    if any(not 0.0 <= b < 1.0 for b in betas):
        raise ValueError("sweep betas must lie in [0, 1)")
    base = params_base.with_alpha(alpha_c)
    consts = scale_constants(base.lam, base.omega.tau)

    def run(item):
        i, b = item
        try:
            return measure(b, base, tol=tol, seed=seed, index=i, consts=consts, **kw)
        except NotConverged as exc:
            return DroppedRecord(b, str(exc))

    results = pmap(run, list(enumerate(betas)), threads)
    records = [r for r in results if isinstance(r, SweepRecord)]
    dropped = [r for r in results if isinstance(r, DroppedRecord)]
    return records, dropped


def recovery_orbit(record: SweepRecord, params: SystemParams, limit=10_000):
    """Orbit from ``(argmin, delta)`` until it reaches ``x >= 1/100``.

    Returns ``(steps, worst ascent ratio while x <= 1/10, bound)``.
    """
    p = params.with_beta(record.beta)
    xs = orbit_path(record.argmin_theta, record.delta, limit, *p.kernel_args)
    hit = np.nonzero(xs >= 0.01)[0]
    steps = int(hit[0]) if len(hit) else limit
    low = xs[: steps + 1]
    ratios = [low[k + 1] / low[k] for k in range(len(low) - 1) if low[k] <= 0.1]
    bound = math.log(1.0 / (20.0 * record.delta)) / LOG_54
    return steps, (min(ratios) if ratios else math.inf), bound


# -- fits --------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    kind: str
    coefficient: float
    exponent: float | None
    predicted_coefficient: float | None
    residual: float
    window: tuple
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def _window(records, min_beta):
    rows = sorted((r for r in records if r.beta >= min_beta and r.beta < 1.0),
                  key=lambda r: r.beta)
    if len(rows) < FIT_MIN_POINTS:
        raise InsufficientWindow(
            f"{len(rows)} records with beta >= {min_beta!r}; need {FIT_MIN_POINTS}"
        )
    return rows


def predicted_distance_coefficient(alpha_c, params: SystemParams) -> float:
    """``(5/8) c(alpha_c + omega)`` with the forcing at full strength."""
    th = theta_at(alpha_c, 1.0, params.omega.hi, params.omega.lo)
    return 0.625 * forcing(th, alpha_c, 1.0, params.lam)[0]


def fit_linear_distance(records, params: SystemParams, alpha_c=None,
                        min_beta=1.0 - 2.0**-FIT_MIN_J) -> FitResult:
    """Through-origin least squares of delta against (1 - beta)."""
    rows = _window(records, min_beta)
    s = np.array([r.one_minus_beta for r in rows])
    d = np.array([r.delta for r in rows])
    coef = float(np.dot(s, d) / np.dot(s, s))
    ratios = d / s
    slope, intercept = np.polyfit(s, d, 1)
    top = ratios[-3:]  # three largest betas: the top two octaves of 1 - beta
    alpha = params.alpha if alpha_c is None else alpha_c
    predicted = predicted_distance_coefficient(alpha, params)
    return FitResult(
        kind="linear-distance",
        coefficient=coef,
        exponent=None,
        predicted_coefficient=predicted,
        residual=float(np.max(np.abs(ratios / coef - 1.0))),
        window=tuple(r.beta for r in rows),
        extras={
            "ratio_to_predicted": coef / predicted,
            "pointwise_ratios": ratios.tolist(),
            "free_slope": float(slope),
            "free_intercept": float(intercept),
            "top_octaves_spread": float((top.max() - top.min()) / top.mean())
            if len(top) else math.nan,
        },
    )


def _loglog(rows):
    s = np.log([r.one_minus_beta for r in rows])
    y = np.log([r.sup_deriv for r in rows])
    slope, icpt = np.polyfit(s, y, 1)
    resid = float(np.max(np.abs(y - (slope * s + icpt))))
    return float(slope), float(icpt), resid


def fit_power_derivative(records, min_beta=1.0 - 2.0**-FIT_MIN_J) -> FitResult:
    """Slope of log sup|dpsi/dtheta| against log(1 - beta)."""
    rows = _window(records, min_beta)
    slope, icpt, resid = _loglog(rows)
    extras = {"log_intercept": icpt, "prefactor": math.exp(icpt)}
    if len(rows) > FIT_MIN_POINTS:
        # drop the lowest octave to test stability of the exponent
        extras["shifted_exponent"] = _loglog(rows[1:])[0]
    scaled = [r.sup_deriv * math.sqrt(r.one_minus_beta) for r in rows]
    extras["scaled_range"] = [min(scaled), max(scaled)]
    return FitResult(
        kind="power-derivative",
        coefficient=math.exp(icpt),
        exponent=slope,
        predicted_coefficient=None,
        residual=resid,
        window=tuple(r.beta for r in rows),
        extras=extras,
    )
