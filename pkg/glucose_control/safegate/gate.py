"""
Forecast-based dose gate.

The proposed bolus is tested on the conformal lower-confidence trajectory ``mu - q``: its weighted
average must stay above ``L`` and its horizon slope above ``-gamma``. Unsafe proposals shrink to the
largest safe grid dose. High-and-rising glucose skips the forecast test, never the guardrails.
The last guardrail caps the dose so that glucose, once all insulin on board has acted, stays
above the eventual floor.
"""
from __future__ import annotations

import enum
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from glucose_control.forecaster import ForecastDist
from glucose_control.tspolicy import DEFAULT_GRID, ActionGrid
from glucose_control.utils.exceptions import ConfigurationFault

from .config import CorrectionFactors, SafetyConfig, make_weights
from .conformal import ConformalCalibration

logger = logging.getLogger(__name__)

PredictFn = Callable[[float], ForecastDist]


class Decision(str, enum.Enum):
    ACCEPT = "accept"
    SCALED = "scaled"
    REJECT = "reject"
    BYPASSED = "bypassed"
    GUARDRAIL_BLOCKED = "guardrail_blocked"
    GUARDRAIL_CAPPED = "guardrail_capped"


@dataclass(frozen=True)
class SafetyVerdict:
    decision: Decision
    final_dose: float
    proposed_dose: float
    w_lcb: float = math.nan  # NaN when the forecast test did not run
    s_lcb: float = math.nan
    q_alpha: float = math.nan


def weighted_average(mu: Sequence[float], weights: Sequence[float]) -> float:
    mu, weights = np.asarray(mu, dtype=np.float64), np.asarray(weights, dtype=np.float64)
    if mu.shape != weights.shape:
        raise ConfigurationFault(f"Trajectory length {mu.shape} does not match weights {weights.shape}.")
    return float(np.dot(weights, mu))


def slope(mu: Sequence[float], bg_now: float, horizon: int | None = None, dt: float = 3.0) -> float:
    """``(mu_K - bg_now) / (K dt)`` in mg/dL/min."""
    horizon = len(mu) if horizon is None else horizon
    return (float(mu[horizon - 1]) - bg_now) / (horizon * dt)


def check_safety(
    dist: ForecastDist, bg_now: float, cal: ConformalCalibration, cfg: SafetyConfig
) -> tuple[bool, float, float]:
    """Test both constraints on the lower-confidence trajectory; returns ``(passes, W_lcb, S_lcb)``."""
    horizon = dist.horizon
    lower = dist.mu - cal.offsets(horizon)
    w_lcb = weighted_average(lower, make_weights(horizon, cfg.decay_lambda))
    s_lcb = slope(lower, bg_now, horizon, cfg.dt)
    return (w_lcb >= cfg.floor_bg and s_lcb >= -cfg.gamma), w_lcb, s_lcb


def largest_safe_dose(
    predict_fn: PredictFn,
    proposed: float,
    bg_now: float,
    cal: ConformalCalibration,
    cfg: SafetyConfig,
    grid: ActionGrid = DEFAULT_GRID,
) -> float:
    """
    Largest grid dose in ``[0, proposed]`` that passes :func:`check_safety`, 0 when none does.

    A failing zero dose rejects outright. Bisection assumes safety is monotone in the dose; its
    floored result is re-checked and a descending grid scan takes over when that check fails.
    """

    def safe(dose: float) -> bool:
        return check_safety(predict_fn(dose), bg_now, cal, cfg)[0]

    if not safe(0.0):
        return 0.0
    low, high = 0.0, proposed
    while high - low > cfg.bisection_tol:
        middle = 0.5 * (low + high)
        if safe(middle):
            low = middle
        else:
            high = middle
    candidate = grid.floor(low)
    if candidate == 0.0 or safe(candidate):
        return candidate
    logger.debug("Bisection result %.2f U failed re-check, scanning the grid", candidate)

    for dose in sorted((d for d in grid.doses if 0.0 < d <= proposed + 1e-9), reverse=True):
        if safe(dose):
            return dose
    return 0.0


def gate(
    proposed: float,
    bg_now: float,
    trend: float,
    iob: float,
    time_of_day: float,
    dist_fn: PredictFn | None,
    cal: ConformalCalibration | None,
    cfg: SafetyConfig,
    grid: ActionGrid = DEFAULT_GRID,
    *,
    carbs_now: float = 0.0,
    factors: CorrectionFactors | None = None,
) -> SafetyVerdict:
    """
    Bypass check, forecast test with bisection fallback, then deterministic guardrails.

    Without a forecaster or calibration (warm-up) only the bypass flag and guardrails apply.
    The eventual-glucose cap needs ``factors``; ``carbs_now`` are the grams announced this step.
    """
    if proposed < 0:
        raise ConfigurationFault(f"Proposed dose must be non-negative, got {proposed}.")
    q_alpha = cal.summary if cal is not None else math.nan
    if proposed == 0.0:
        return SafetyVerdict(Decision.ACCEPT, 0.0, 0.0, q_alpha=q_alpha)

    dose = proposed
    w_lcb = s_lcb = math.nan
    if bg_now >= cfg.bypass_bg and trend >= cfg.bypass_trend:
        decision = Decision.BYPASSED
    elif dist_fn is None or cal is None:
        decision = Decision.ACCEPT
    else:
        passes, w_lcb, s_lcb = check_safety(dist_fn(proposed), bg_now, cal, cfg)
        decision = Decision.ACCEPT
        if not passes:
            dose = largest_safe_dose(dist_fn, proposed, bg_now, cal, cfg, grid)
            decision = Decision.SCALED if dose > 0 else Decision.REJECT
            logger.debug(
                "Gate %s %.2f -> %.2f U (W_lcb=%.1f, S_lcb=%.2f)", decision.value, proposed, dose, w_lcb, s_lcb
            )

    if dose > 0:
        if bg_now < cfg.guard_bg_min or (trend < cfg.guard_trend_min and bg_now < cfg.guard_trend_bg):
            dose, decision = 0.0, Decision.GUARDRAIL_BLOCKED
        else:
            if iob + dose > cfg.iob_cap:
                dose, decision = grid.floor(max(0.0, cfg.iob_cap - iob)), Decision.GUARDRAIL_CAPPED
            if cfg.is_night(time_of_day) and dose > cfg.night_cap:
                dose, decision = grid.floor(cfg.night_cap), Decision.GUARDRAIL_CAPPED
            if factors is not None:
                headroom = factors.insulin_headroom(bg_now, iob, carbs_now, cfg.eventual_floor)
                if dose > headroom + 1e-9:
                    dose, decision = grid.floor(max(0.0, headroom)), Decision.GUARDRAIL_CAPPED

    return SafetyVerdict(decision, dose, proposed, w_lcb=w_lcb, s_lcb=s_lcb, q_alpha=q_alpha)
