"""Discretization of (BG, trend) into the finite policy state space."""
from __future__ import annotations

import math
from bisect import bisect_right
from collections.abc import Sequence
from dataclasses import dataclass

from glucose_control.utils.exceptions import ConfigurationFault

DEFAULT_TREND_EDGES = (-math.inf, -2.0, -1.0, -0.3, 0.3, 1.0, 2.0, math.inf)


@dataclass(frozen=True)
class BinSpec:
    bg_low: float = 40.0
    bg_high: float = 300.0
    bg_width: float = 20.0
    trend_edges: tuple[float, ...] = DEFAULT_TREND_EDGES

    def __post_init__(self):
        if self.bg_width <= 0 or self.bg_high <= self.bg_low:
            raise ConfigurationFault(f"Invalid BG binning [{self.bg_low}, {self.bg_high}) by {self.bg_width}.")
        if len(self.trend_edges) < 2 or any(a >= b for a, b in zip(self.trend_edges, self.trend_edges[1:])):
            raise ConfigurationFault(f"Trend edges must be strictly increasing, got {self.trend_edges}.")

    @property
    def n_bg_bins(self) -> int:
        return math.ceil((self.bg_high - self.bg_low) / self.bg_width)

    @property
    def n_trend_bins(self) -> int:
        return len(self.trend_edges) - 1

    @property
    def n_states(self) -> int:
        return self.n_bg_bins * self.n_trend_bins


def discretize(bg: float, trend: float, bins: BinSpec = BinSpec()) -> int:
    """State id ``bg_bin * n_trend_bins + trend_bin``; trend bins are half-open ``[lo, hi)``."""
    bg_bin = min(max(int((bg - bins.bg_low) // bins.bg_width), 0), bins.n_bg_bins - 1)
    trend_bin = min(max(bisect_right(bins.trend_edges, trend) - 1, 0), bins.n_trend_bins - 1)
    return bg_bin * bins.n_trend_bins + trend_bin


def trend_of(recent_bg: Sequence[float], dt: float) -> float:
    """Mean per-step change over the last three samples, in mg/dL/min; 0 with fewer than three."""
    if dt <= 0:
        raise ConfigurationFault(f"Sampling interval must be positive, got {dt}.")
    if len(recent_bg) < 3:
        return 0.0
    return (recent_bg[-1] - recent_bg[-3]) / (2.0 * dt)
