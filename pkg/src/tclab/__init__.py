"""Numerical laboratory for a quasi-periodically forced quadratic map.

The attracting invariant curve is computed by pullback with exact tangent
derivatives, the collision parameter is located by root finding, and the
approach to collision is measured along sweeps of the forcing strength.
"""
__version__ = "0.1.0"

from .diophantine import RotationNumber, continued_fraction, estimate_kappa, min_return_time, verify_no_return
from .dynamics import LiftedState, RegionConstants, SystemParams, forcing_c, iterate, lyapunov_estimate, step
from .attractor import CurveSample, choose_depth, min_distance, pullback_value, sample_curve, sup_derivative
from .critical import CriticalResult, chain_defect, find_alpha_c, verify_chain
from .asymptotics import FitResult, SweepRecord, compute_M_C, fit_linear_distance, fit_power_derivative, scale_constants, scale_index, sweep

__all__ = [
    "RotationNumber", "continued_fraction", "estimate_kappa", "min_return_time", "verify_no_return",
    "LiftedState", "RegionConstants", "SystemParams", "forcing_c", "iterate", "lyapunov_estimate", "step",
    "CurveSample", "choose_depth", "min_distance", "pullback_value", "sample_curve", "sup_derivative",
    "CriticalResult", "chain_defect", "find_alpha_c", "verify_chain",
    "FitResult", "SweepRecord", "compute_M_C", "fit_linear_distance", "fit_power_derivative",
    "scale_constants", "scale_index", "sweep",
]
