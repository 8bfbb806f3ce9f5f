from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from glucose_control.utils.exceptions import ConfigurationFault


def make_weights(horizon: int, decay_lambda: float) -> np.ndarray:
    """``w_k`` proportional to ``exp(-lambda (k - 1))`` for ``k = 1..K``, normalized to sum to 1."""
    if horizon < 1:
        raise ConfigurationFault(f"Horizon must be at least 1, got {horizon}.")
    if decay_lambda < 0:
        raise ConfigurationFault(f"Decay rate must be non-negative, got {decay_lambda}.")
    raw = np.exp(-decay_lambda * np.arange(horizon))
    return raw / raw.sum()


@dataclass(frozen=True)
class CorrectionFactors:
    """A patient's glucose drop per U of insulin and rise per g of carbohydrate."""

    isf: float  # mg/dL per U
    csf: float  # mg/dL per g

    def __post_init__(self):
        if not (math.isfinite(self.isf) and self.isf > 0 and math.isfinite(self.csf) and self.csf > 0):
            raise ConfigurationFault(f"Correction factors must be finite and positive, got {self.isf}, {self.csf}.")

    def insulin_headroom(self, bg_now: float, iob: float, carbs_now: float, floor: float) -> float:
        """
        Extra insulin, U, that keeps ``bg_now + csf carbs_now - isf (iob + dose)`` at or above ``floor``.

        Only carbs announced at this step are credited; carbs already absorbing are not.
        """
        return (bg_now + self.csf * carbs_now - floor) / self.isf - iob


@dataclass(frozen=True)
class SafetyConfig:
    floor_bg: float = 90.0  # L, mg/dL
    gamma: float = 1.5  # mg/dL/min
    alpha: float = 0.1
    decay_lambda: float = 0.15
    horizon: int = 10
    dt: float = 3.0  # min
    bypass_bg: float = 250.0
    bypass_trend: float = 0.5
    guard_bg_min: float = 90.0
    guard_trend_min: float = -1.0
    guard_trend_bg: float = 120.0
    iob_cap: float = 5.0  # U
    eventual_floor: float = 100.0  # mg/dL, lowest glucose once insulin on board has acted
    night_window: tuple[float, float] = (0.0, 360.0)  # [start, end) min of day
    night_cap: float = 0.5  # U
    bisection_tol: float = 0.01  # U
    per_step: bool = False

    def __post_init__(self):
        errors = {}
        if not 0.0 < self.alpha < 1.0:
            errors["alpha"] = "must lie in (0, 1)"
        if self.floor_bg <= 40.0:
            errors["floor_bg"] = "must exceed 40 mg/dL"
        if self.eventual_floor <= 40.0:
            errors["eventual_floor"] = "must exceed 40 mg/dL"
        if self.gamma <= 0:
            errors["gamma"] = "must be positive"
        if self.horizon < 1:
            errors["horizon"] = "must be at least 1"
        if self.dt <= 0:
            errors["dt"] = "must be positive"
        if self.decay_lambda < 0:
            errors["decay_lambda"] = "must be non-negative"
        if self.iob_cap < 0 or self.night_cap < 0:
            errors["iob_cap"] = "caps must be non-negative"
        if self.bisection_tol <= 0:
            errors["bisection_tol"] = "must be positive"
        start, end = self.night_window
        if not (0.0 <= start < 1440.0 and 0.0 <= end <= 1440.0):
            errors["night_window"] = "bounds must lie within one day"
        if errors:
            raise ConfigurationFault(f"Invalid safety configuration: {errors}", errors=errors)

    @property
    def weights(self) -> np.ndarray:
        return make_weights(self.horizon, self.decay_lambda)

    def is_night(self, time_of_day: float) -> bool:
        start, end = self.night_window
        tod = math.fmod(time_of_day, 1440.0)
        if start <= end:
            return start <= tod < end
        return tod >= start or tod < end

    def as_dict(self) -> dict:
        return asdict(self)
