"""
Predictive control on an analytic superposition model, with Thompson Sampling over how
aggressively the optimal dose is applied.

The model knows the patient's true sensitivities and absorption rates but nothing about noise:

    BG(t) = bg_now - p (bg_now - G_b) t
            - S_I (u A_i(t) + iob F_i(t))
            + S_C f (carbs A_c(t) + cob F_c(t))

where ``A(t) = 1 - exp(-k t)(1 + k t)`` is the fraction of a two-compartment depot that has
appeared by ``t`` and ``F(t)`` spreads the amounts already on board evenly over the remaining
half of their action windows.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from glucose_control.looprt import (
    CARB_ABSORPTION_DURATION,
    COLD_START,
    INSULIN_ACTION_DURATION,
    ControllerState,
    StepContext,
    StepRecord,
    project,
)
from glucose_control.tspolicy import DEFAULT_GRID, ActionGrid, BinSpec, PolicyTable, discretize, select
from glucose_control.utils.exceptions import ConfigurationFault
from glucose_control.vpatient import BIOAVAILABILITY, MealEvent, PatientParams

DEFAULT_MULTIPLIERS = (0.5, 0.75, 1.0, 1.25, 1.5)


def depot_appearance(rate: float, elapsed: np.ndarray) -> np.ndarray:
    """Fraction of an impulse into a two-compartment chain with rate ``rate`` that has left it."""
    kt = rate * np.asarray(elapsed, dtype=np.float64)
    return 1.0 - np.exp(-kt) * (1.0 + kt)


@dataclass(frozen=True)
class TsmpcConfig:
    horizon: int = 10
    dt: float = 3.0
    setpoint: float = 120.0
    dose_weight: float = 2000.0  # rho, (mg/dL)^2 per U^2
    min_bg: float = 80.0
    multipliers: tuple[float, ...] = DEFAULT_MULTIPLIERS

    def __post_init__(self):
        if self.horizon < 1 or self.dt <= 0:
            raise ConfigurationFault(f"Invalid prediction horizon {self.horizon} x {self.dt} min.")
        if not self.multipliers or min(self.multipliers) <= 0:
            raise ConfigurationFault(f"Aggressiveness multipliers must be positive, got {self.multipliers}.")
        if self.dose_weight < 0:
            raise ConfigurationFault("Dose weight must be non-negative.")


@dataclass(frozen=True)
class AnalyticModel:
    """Per-U and per-g glucose response curves over the horizon, derived from patient parameters."""

    insulin_curve: np.ndarray  # mg/dL drop per U of new bolus
    carb_curve: np.ndarray  # mg/dL rise per g of new carbs
    iob_curve: np.ndarray  # mg/dL drop per U on board
    cob_curve: np.ndarray  # mg/dL rise per g on board
    elapsed: np.ndarray  # min
    clearance: float
    basal_bg: float

    @classmethod
    def from_params(cls, params: PatientParams, horizon: int = 10, dt: float = 3.0) -> AnalyticModel:
        elapsed = dt * np.arange(1, horizon + 1)
        carb_gain = params.carb_sensitivity * BIOAVAILABILITY
        return cls(
            insulin_curve=params.insulin_sensitivity * depot_appearance(params.insulin_rate, elapsed),
            carb_curve=carb_gain * depot_appearance(params.carb_rate, elapsed),
            iob_curve=params.insulin_sensitivity * np.minimum(1.0, elapsed / (INSULIN_ACTION_DURATION / 2)),
            cob_curve=carb_gain * np.minimum(1.0, elapsed / (CARB_ABSORPTION_DURATION / 2)),
            elapsed=elapsed,
            clearance=params.glucose_clearance_rate,
            basal_bg=params.initial_bg,
        )

    def predict(self, bg_now: float, dose: float, carbs: float = 0.0, iob: float = 0.0, cob: float = 0.0) -> np.ndarray:
        drift = -self.clearance * (bg_now - self.basal_bg) * self.elapsed
        return (
            bg_now
            + drift
            - dose * self.insulin_curve
            - iob * self.iob_curve
            + carbs * self.carb_curve
            + cob * self.cob_curve
        )


def mpc_dose(
    model: AnalyticModel,
    bg_now: float,
    cfg: TsmpcConfig,
    grid: ActionGrid = DEFAULT_GRID,
    carbs: float = 0.0,
    iob: float = 0.0,
    cob: float = 0.0,
) -> float:
    """
    Grid dose minimizing ``sum (BG_k - setpoint)^2 + rho u^2`` subject to ``BG_k >= min_bg``.

    Returns 0 when no grid dose is feasible.
    """
    best, best_cost = 0.0, math.inf
    for dose in grid.doses:
        trajectory = model.predict(bg_now, dose, carbs, iob, cob)
        if np.any(trajectory < cfg.min_bg):
            continue
        cost = float(np.sum((trajectory - cfg.setpoint) ** 2)) + cfg.dose_weight * dose**2
        if cost < best_cost:
            best, best_cost = dose, cost
    return best


@dataclass
class TsmpcController:
    model: AnalyticModel
    config: TsmpcConfig = field(default_factory=TsmpcConfig)
    grid: ActionGrid = DEFAULT_GRID
    bins: BinSpec = field(default_factory=BinSpec)
    table: PolicyTable | None = None
    name: str = "tsmpc"
    learns: bool = True

    def __post_init__(self):
        if self.table is None:
            self.table = PolicyTable(self.bins.n_states, len(self.config.multipliers))

    @classmethod
    def for_patient(cls, params: PatientParams, config: TsmpcConfig | None = None, **kwargs) -> TsmpcController:
        config = config or TsmpcConfig()
        return cls(model=AnalyticModel.from_params(params, config.horizon, config.dt), config=config, **kwargs)

    def decide(self, ctrl: ControllerState, ctx: StepContext) -> StepRecord:
        return tsmpc_controller(ctrl, ctx, self)

    def learn(self, state_id: int, action_index: int, reward: float) -> None:
        self.table.update(state_id, action_index, reward)


def tsmpc_controller(ctrl: ControllerState, ctx: StepContext, controller: TsmpcController) -> StepRecord:
    record = StepRecord(step=ctx.step, clock=ctx.clock, bg_observed=ctx.bg_observed, iob=ctrl.iob, cob=ctrl.cob)
    if not ctrl.window_ready:
        record.decision = COLD_START
        return record
    record.trend = ctrl.trend
    record.state_id = discretize(ctx.bg_observed, record.trend, controller.bins)
    record.action_index = select(controller.table, record.state_id, ctrl.policy_rng, ctrl.mode)
    carbs = _carbs(ctx.meals_now)
    # COB already includes this step's meal
    base = mpc_dose(
        controller.model,
        ctx.bg_observed,
        controller.config,
        controller.grid,
        carbs=carbs,
        iob=ctrl.iob,
        cob=max(ctrl.cob - carbs, 0.0),
    )
    scaled = base * controller.config.multipliers[record.action_index]
    record.policy_dose = base
    record.proposed_dose = project(min(scaled, controller.grid.maximum), controller.grid)
    record.final_dose = record.delivered_dose = record.proposed_dose
    return record


def _carbs(meals: Sequence[MealEvent]) -> float:
    return sum(meal.carbs for meal in meals)
