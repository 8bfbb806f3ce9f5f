"""Per-step feature rows, windows and their standardization."""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from glucose_control.utils.exceptions import ConfigurationFault
from glucose_control.utils.glycemia import risk_indices

FEATURE_NAMES = ("bg", "iob", "cob", "tod_sin", "tod_cos", "lbgi", "hbgi")
N_FEATURES = len(FEATURE_NAMES)
WINDOW_LENGTH = 10
HORIZON = 10
MINUTES_PER_DAY = 1440.0
_MIN_SD = 1e-6
# smallest sd a feature is scaled by, in its own units
SD_FLOOR = np.array([10.0, 0.2, 2.0, 0.05, 0.05, 1.0, 1.0])


def feature_row(bg: float, iob: float, cob: float, clock: float) -> np.ndarray:
    """Raw (unstandardized) features of one control step; ``clock`` in minutes, any day."""
    angle = 2.0 * math.pi * (clock % MINUTES_PER_DAY) / MINUTES_PER_DAY
    low, high = risk_indices(bg)
    return np.array([bg, iob, cob, math.sin(angle), math.cos(angle), float(low), float(high)])


@dataclass(frozen=True)
class FeatureScaler:
    """
    Per-feature mean/sd plus the dose statistics, all taken from the training split.

    Feature sds never go below :data:`SD_FLOOR`, so a narrow training range cannot blow up the
    standardized value of an ordinary excursion.
    """

    mean: np.ndarray
    sd: np.ndarray
    dose_mean: float = 0.0
    dose_sd: float = 1.0

    @classmethod
    def fit(cls, rows: np.ndarray, doses: np.ndarray) -> FeatureScaler:
        rows = np.asarray(rows, dtype=np.float64).reshape(-1, N_FEATURES)
        if rows.shape[0] == 0:
            raise ConfigurationFault("Cannot fit a feature scaler on zero rows.")
        doses = np.asarray(doses, dtype=np.float64)
        sd = rows.std(axis=0)
        dose_sd = float(doses.std()) if doses.size else 0.0
        return cls(
            mean=rows.mean(axis=0),
            sd=np.maximum(sd, SD_FLOOR),
            dose_mean=float(doses.mean()) if doses.size else 0.0,
            dose_sd=dose_sd if dose_sd >= _MIN_SD else 1.0,
        )

    @property
    def bg_mean(self) -> float:
        return float(self.mean[0])

    @property
    def bg_sd(self) -> float:
        return float(self.sd[0])

    def standardize(self, rows: np.ndarray) -> np.ndarray:
        return (np.asarray(rows, dtype=np.float64) - self.mean) / self.sd

    def destandardize(self, rows: np.ndarray) -> np.ndarray:
        return np.asarray(rows, dtype=np.float64) * self.sd + self.mean

    def standardize_bg(self, bg) -> np.ndarray:
        return (np.asarray(bg, dtype=np.float64) - self.bg_mean) / self.bg_sd

    def destandardize_bg(self, bg) -> np.ndarray:
        return np.asarray(bg, dtype=np.float64) * self.bg_sd + self.bg_mean

    def standardize_dose(self, dose) -> np.ndarray:
        return (np.asarray(dose, dtype=np.float64) - self.dose_mean) / self.dose_sd

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {
            "feature_mean": self.mean,
            "feature_sd": self.sd,
            "dose_stats": np.array([self.dose_mean, self.dose_sd]),
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> FeatureScaler:
        dose_mean, dose_sd = arrays["dose_stats"]
        return cls(
            mean=arrays["feature_mean"], sd=arrays["feature_sd"], dose_mean=float(dose_mean), dose_sd=float(dose_sd)
        )


@dataclass(frozen=True)
class FeatureWindow:
    """``H x F`` standardized features ending at the current step."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != N_FEATURES:
            raise ConfigurationFault(f"Feature window must be H x {N_FEATURES}, got {self.values.shape}.")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationFault("Feature window contains NaN/Inf values.")

    @classmethod
    def from_rows(cls, rows: Sequence[np.ndarray], scaler: FeatureScaler) -> FeatureWindow:
        return cls(scaler.standardize(np.vstack(rows)))

    @property
    def length(self) -> int:
        return self.values.shape[0]
