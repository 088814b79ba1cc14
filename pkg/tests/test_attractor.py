import math

import numpy as np
import pytest

from tclab.attractor import (
    _pullback_one,
    choose_depth,
    golden_section,
    invariance_defect,
    min_distance,
    pullback_value,
    sample_curve,
    sup_derivative,
    t1_bound,
)
from tclab.errors import NotConverged


def test_choose_depth_examples():
    assert choose_depth(0.0, 1e-12) == 93
    assert 2 * math.log(0.02 / 1e-12) / math.log(5 / 3) == pytest.approx(92.87, abs=0.01)
    assert choose_depth(0.999, 1e-12) == 93 + 21
    assert t1_bound(0.999) == pytest.approx(math.log(100) / math.log(1.25))


def test_choose_depth_monotone():
    betas = [0.0, 0.5, 0.9, 0.99, 0.999, 1 - 2**-17]
    depths = [choose_depth(b, 1e-12) for b in betas]
    assert depths == sorted(depths)
    tols = [1e-6, 1e-9, 1e-12, 1e-15]
    depths = [choose_depth(0.5, t) for t in tols]
    assert depths == sorted(depths)
    with pytest.raises(ValueError):
        choose_depth(1.0, 1e-12)


def test_pullback_unforced(mid_params):
    p0 = mid_params.with_beta(0.0)
    r = pullback_value(0.37, 200, p0)
    assert r.psi == pytest.approx(1 / 3, abs=1e-15)
    assert r.dpsi_dtheta == 0.0
    assert r.residual <= 0.6**100 * 0.02
    assert r.converged


def test_pullback_far_from_peaks_in_C(mid_params):
    r = pullback_value(0.3, choose_depth(0.5, 1e-12), mid_params)
    assert 1 / 3 - 0.01 <= r.psi <= 1 / 3 + 0.01


def test_residual_decay_with_depth(mid_params):
    th = 0.3
    half = pullback_value(th, 20, mid_params).residual
    full = pullback_value(th, 40, mid_params).residual
    assert full <= half * 10 * 0.6 ** (40 / 4)


def test_strict_not_converged(mid_params):
    with pytest.raises(NotConverged) as info:
        pullback_value(0.3, 2, mid_params, strict=True)
    assert info.value.data.residual > 1e-12


def test_beta_one_never_converged(critical, base_params):
    curve = sample_curve((64, 0), base_params.with_beta(1.0))
    assert not curve.converged.any()


def test_unforced_curve(mid_params):
    curve = sample_curve((1024, 0), mid_params.with_beta(0.0))
    assert np.all(np.abs(curve.psi - 1 / 3) <= 1e-12)
    assert curve.all_converged
    assert min_distance(curve)[0] == pytest.approx(1 / 3, abs=1e-12)
    assert sup_derivative(curve)[0] == 0.0


def test_resolution_doubling_is_pointwise(mid_params):
    coarse = sample_curve((256, 0), mid_params)
    fine = sample_curve((512, 0), mid_params)
    assert np.array_equal(fine.psi[::2], coarse.psi)
    assert np.array_equal(fine.dpsi_dtheta[::2], coarse.dpsi_dtheta)


def test_thread_count_does_not_matter(mid_params):
    a = sample_curve((300, 0.5), mid_params, threads=1)
    b = sample_curve((300, 0.5), mid_params, threads=7)
    assert np.array_equal(a.psi, b.psi) and np.array_equal(a.residual, b.residual)


def test_curve_invariants(mid_params):
    curve = sample_curve((512, 0.25), mid_params)
    assert np.all((curve.psi >= 0) & (curve.psi <= 1))
    assert np.all(curve.residual >= 0)
    assert np.all(curve.residual[curve.converged] <= curve.tol)
    assert np.all(np.diff(curve.thetas) > 0)


@pytest.mark.parametrize("beta", [0.5, 0.9, 0.99])
def test_functional_equation(base_params, beta):
    curve = sample_curve((200, 0.1), base_params.with_beta(beta))
    defect = invariance_defect(curve)
    assert np.all(defect <= 10 * np.maximum(curve.residual, 1e-15) + 1e-15)


@pytest.mark.parametrize("beta", [0.0, 0.5, 0.9])
def test_seed_independence(base_params, beta, rng):
    p = base_params.with_beta(beta)
    for th in rng.random(50):
        a = _pullback_one(th, 200, *p.kernel_args, 0.1, 0.9)[0]
        b = _pullback_one(th, 200, *p.kernel_args, 1 / 3, 1 / 3)[0]
        assert abs(a - b) <= 10 * 1e-12


@pytest.mark.parametrize("beta", [0.5, 0.9, 0.999])
def test_repeller_gap(base_params, beta):
    curve = sample_curve((4096, 0.5), base_params.with_beta(beta))
    assert curve.psi.min() > 0.0


def test_derivative_matches_grid_differences(mid_params):
    n = 2**14
    curve = sample_curve((n, 0), mid_params)
    fd = (np.roll(curve.psi, -1) - np.roll(curve.psi, 1)) * n / 2
    fd2 = (np.roll(curve.psi, -2) - np.roll(curve.psi, 2)) * n / 4
    # peak-affected zones are where the grid does not resolve the curve:
    # there the two stencils disagree
    resolved = np.abs(fd - fd2) / np.maximum(1.0, np.abs(fd)) < 1e-5
    rel = np.abs(fd - curve.dpsi_dtheta) / np.maximum(1.0, np.abs(curve.dpsi_dtheta))
    assert resolved.sum() > 3 * n // 4
    assert rel[resolved].max() <= 1e-4


def test_golden_section_parabola():
    x, fx = golden_section(lambda t: (t - 0.3) ** 2, 0.0, 1.0, 1e-12)
    assert x == pytest.approx(0.3, abs=1e-8)
    assert fx <= 1e-16


def test_min_distance_refines_below_grid(base_params):
    p = base_params.with_beta(0.99)
    curve = sample_curve((4096, 0.5), p)
    delta, arg = min_distance(curve)
    assert delta <= curve.psi.min()
    assert pullback_value(arg, int(curve.depth.max()), p).psi == pytest.approx(delta, rel=1e-12)
