"""Weak trapezoidal integration of SDEs with fixed-direction noise."""

__version__ = "0.1.0"

from .model import NoiseChannel, SdeSystem, augment_time, evaluate_drift, evaluate_rate
from .schemes import (
    StepResult,
    ThetaScheme,
    euler_step,
    make_theta_scheme,
    midpoint_drift_step,
    richardson_pair_step,
    wt_step,
)
from .ensemble import EnsembleEstimate, EnsembleSpec, degenerate_sweep, estimate_error, run_ensemble
from .richardson import RichardsonEstimate, run_richardson
from .analysis import ConvergenceStudy, convergence_study, fit_slope, theta_convergence_sweep

__all__ = [
    "ConvergenceStudy", "EnsembleEstimate", "EnsembleSpec", "NoiseChannel", "RichardsonEstimate",
    "SdeSystem", "StepResult", "ThetaScheme", "augment_time", "convergence_study",
    "degenerate_sweep", "estimate_error", "euler_step", "evaluate_drift", "evaluate_rate",
    "fit_slope", "make_theta_scheme", "midpoint_drift_step", "richardson_pair_step",
    "run_ensemble", "run_richardson", "theta_convergence_sweep", "wt_step",
]
