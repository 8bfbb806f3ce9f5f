from .config import CorrectionFactors, SafetyConfig, make_weights
from .conformal import (
    MIN_CALIBRATION_RECORDS,
    ConformalCalibration,
    calibrate,
    calibrate_residuals,
    conformal_quantile,
    empirical_coverage,
)
from .gate import Decision, SafetyVerdict, check_safety, gate, largest_safe_dose, slope, weighted_average

__all__ = [
    "MIN_CALIBRATION_RECORDS",
    "ConformalCalibration",
    "CorrectionFactors",
    "Decision",
    "SafetyConfig",
    "SafetyVerdict",
    "calibrate",
    "calibrate_residuals",
    "check_safety",
    "conformal_quantile",
    "empirical_coverage",
    "gate",
    "largest_safe_dose",
    "make_weights",
    "slope",
    "weighted_average",
]
