"""Kovatchev risk transform and the clinical glucose thresholds built on it."""
import numpy as np
from numpy.typing import ArrayLike, NDArray

HYPO_THRESHOLD = 70.0
SEVERE_HYPO_THRESHOLD = 54.0
HYPER_THRESHOLD = 180.0

_RISK_SCALE = 1.509
_RISK_EXPONENT = 1.084
_RISK_OFFSET = 5.381


def risk_transform(glucose: ArrayLike) -> NDArray[np.float64]:
    """Symmetrized glucose scale; negative below the risk root (~112.5 mg/dL), positive above."""
    g = np.asarray(glucose, dtype=np.float64)
    if np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise ValueError("Glucose values must be finite and strictly positive.")
    return _RISK_SCALE * (np.log(g) ** _RISK_EXPONENT - _RISK_OFFSET)


def risk(glucose: ArrayLike) -> NDArray[np.float64]:
    return 10.0 * risk_transform(glucose) ** 2


def risk_indices(glucose: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Per-sample low/high risk components (the summands of LBGI and HBGI)."""
    f = risk_transform(glucose)
    r = 10.0 * f**2
    return np.where(f < 0, r, 0.0), np.where(f > 0, r, 0.0)


def time_in_range(glucose: ArrayLike, low: float = HYPO_THRESHOLD, high: float = HYPER_THRESHOLD) -> float:
    """Percentage of samples with ``low <= g <= high``."""
    g = np.asarray(glucose, dtype=np.float64)
    return 100.0 * float(np.mean((g >= low) & (g <= high)))


def time_below(glucose: ArrayLike, threshold: float = HYPO_THRESHOLD) -> float:
    """Percentage of samples strictly below ``threshold``."""
    return 100.0 * float(np.mean(np.asarray(glucose, dtype=np.float64) < threshold))


def time_above(glucose: ArrayLike, threshold: float = HYPER_THRESHOLD) -> float:
    """Percentage of samples strictly above ``threshold``."""
    return 100.0 * float(np.mean(np.asarray(glucose, dtype=np.float64) > threshold))
