"""Split-conformal calibration of the forecast mean from held-out absolute residuals."""
from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from glucose_control.forecaster import ForecasterModel, TrainRecord, residuals
from glucose_control.utils.exceptions import ConfigurationFault

logger = logging.getLogger(__name__)

MIN_CALIBRATION_RECORDS = 20


def conformal_quantile(residuals: Sequence[float], alpha: float) -> float:
    """The ``ceil((n + 1)(1 - alpha))``-th smallest residual, clamped to the largest one."""
    ordered = np.sort(np.asarray(residuals, dtype=np.float64))
    if ordered.size == 0:
        raise ConfigurationFault("No residuals to calibrate on.")
    rank = math.ceil((ordered.size + 1) * (1.0 - alpha) - 1e-9)
    return float(ordered[min(max(rank, 1), ordered.size) - 1])


@dataclass(frozen=True)
class ConformalCalibration:
    residuals: np.ndarray  # sorted ascending; pooled (n*K,) or per step (K, n)
    q_alpha: float | np.ndarray  # mg/dL; scalar when pooled, (K,) per step
    n_calibration: int  # records
    alpha: float

    @property
    def per_step(self) -> bool:
        return np.ndim(self.q_alpha) == 1

    def offsets(self, horizon: int) -> np.ndarray:
        """Amount subtracted from each forecast step for the lower-confidence trajectory."""
        if self.per_step:
            if len(self.q_alpha) != horizon:
                raise ConfigurationFault(f"Calibrated for {len(self.q_alpha)} steps, forecast has {horizon}.")
            return np.asarray(self.q_alpha)
        return np.full(horizon, float(self.q_alpha))

    @property
    def summary(self) -> float:
        """Single number for logs: the pooled quantile or the largest per-step one."""
        return float(np.max(self.q_alpha))


def calibrate_residuals(
    abs_residuals: np.ndarray,
    alpha: float,
    per_step: bool = False,
    min_records: int = MIN_CALIBRATION_RECORDS,
) -> ConformalCalibration:
    """
    Calibrate from an ``(n_records, K)`` array of ``|y_k - mu_k|``.

    :raise ConfigurationFault: when fewer than ``min_records`` records are available.
    """
    abs_residuals = np.atleast_2d(np.asarray(abs_residuals, dtype=np.float64))
    n = abs_residuals.shape[0] if abs_residuals.size else 0
    if n < min_records:
        raise ConfigurationFault(f"Conformal calibration needs at least {min_records} records, got {n}.")
    if not 0.0 < alpha < 1.0:
        raise ConfigurationFault(f"alpha must lie in (0, 1), got {alpha}.")
    if per_step:
        residuals = np.sort(abs_residuals.T, axis=1)
        q_alpha: float | np.ndarray = np.array([conformal_quantile(row, alpha) for row in residuals])
    else:
        residuals = np.sort(abs_residuals.ravel())
        q_alpha = conformal_quantile(residuals, alpha)
    calibration = ConformalCalibration(residuals=residuals, q_alpha=q_alpha, n_calibration=n, alpha=alpha)
    logger.info("Conformal calibration on %d records: q_alpha=%.2f mg/dL (alpha=%.2f)", n, calibration.summary, alpha)
    return calibration


def calibrate(
    model: ForecasterModel, records: Sequence[TrainRecord], alpha: float = 0.1, per_step: bool = False
) -> ConformalCalibration:
    """Residuals of ``model`` on ``records`` (disjoint from its training split), then :func:`calibrate_residuals`."""
    if len(records) < MIN_CALIBRATION_RECORDS:
        raise ConfigurationFault(
            f"Conformal calibration needs at least {MIN_CALIBRATION_RECORDS} records, got {len(records)}."
        )
    return calibrate_residuals(residuals(model, records), alpha, per_step)


def empirical_coverage(calibration: ConformalCalibration, abs_residuals: np.ndarray) -> float:
    """Fraction of held-out residuals inside the calibrated band."""
    abs_residuals = np.atleast_2d(np.asarray(abs_residuals, dtype=np.float64))
    bound = calibration.offsets(abs_residuals.shape[1])
    return float(np.mean(abs_residuals <= bound))
