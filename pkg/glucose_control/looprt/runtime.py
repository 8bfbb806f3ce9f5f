"""
Per-episode controller state and the TSODE decision pipeline.

Every step: features from the observed reading, trend, Thompson Sampling proposal plus meal
pre-bolus, projection onto the grid, refractory check, safety gate, delivery.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from glucose_control.forecaster import WINDOW_LENGTH, FeatureWindow, feature_row
from glucose_control.safegate import ConformalCalibration, CorrectionFactors, SafetyConfig, SafetyVerdict, gate
from glucose_control.tspolicy import DEFAULT_GRID, ActionGrid, BinSpec, Mode, PolicyTable, discretize, select, trend_of
from glucose_control.vpatient import BIOAVAILABILITY, MealEvent, PatientParams

from .accounting import CARB_ABSORPTION_DURATION, INSULIN_ACTION_DURATION, cob_of, iob_of, prebolus, project

logger = logging.getLogger(__name__)

REFRACTORY_PERIOD = 20.0  # min
COLD_START = "cold_start"
REFRACTORY = "refractory"
DELIVERED = "delivered"
NO_ACTION = -1


@dataclass
class ControllerState:
    """Observation buffers and dosing history of one running controller."""

    dt: float = 3.0
    window_length: int = WINDOW_LENGTH
    mode: Mode = Mode.EXPLORE
    policy_rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    rows: deque = field(init=False)
    recent_bg: deque = field(init=False)
    bolus_history: list[tuple[float, float]] = field(default_factory=list)
    carb_history: list[tuple[float, float]] = field(default_factory=list)
    last_bolus_time: float = -math.inf
    iob: float = 0.0
    cob: float = 0.0

    def __post_init__(self):
        self.rows = deque(maxlen=self.window_length)
        self.recent_bg = deque(maxlen=3)

    @property
    def window_ready(self) -> bool:
        return len(self.rows) == self.window_length

    @property
    def trend(self) -> float:
        return trend_of(list(self.recent_bg), self.dt)

    def observe(self, bg_observed: float, clock: float, meals_now: Sequence[MealEvent]) -> None:
        """Book announced carbs, refresh IOB/COB and push the new feature row."""
        self.carb_history.extend((clock, meal.carbs) for meal in meals_now)
        self._prune(clock)
        self.iob = iob_of(self.bolus_history, clock)
        self.cob = cob_of(self.carb_history, clock)
        self.recent_bg.append(bg_observed)
        self.rows.append(feature_row(bg_observed, self.iob, self.cob, clock))

    def register_delivery(self, clock: float, dose: float) -> None:
        if dose > 0:
            self.bolus_history.append((clock, dose))
            self.last_bolus_time = clock

    def in_refractory(self, clock: float, period: float = REFRACTORY_PERIOD) -> bool:
        return clock - self.last_bolus_time < period

    def _prune(self, clock: float) -> None:
        self.bolus_history = [(t, d) for t, d in self.bolus_history if clock - t < INSULIN_ACTION_DURATION]
        self.carb_history = [(t, c) for t, c in self.carb_history if clock - t < CARB_ABSORPTION_DURATION]


@dataclass(frozen=True)
class StepContext:
    step: int
    clock: float  # min since episode start
    bg_observed: float
    meals_now: tuple[MealEvent, ...] = ()

    @property
    def time_of_day(self) -> float:
        return self.clock % 1440.0


@dataclass
class StepRecord:
    step: int
    clock: float
    bg_observed: float
    iob: float
    cob: float
    trend: float = 0.0
    bg_true: float = math.nan
    state_id: int = NO_ACTION
    action_index: int = NO_ACTION  # arm the policy selected, credited with this step's reward
    policy_dose: float = 0.0
    prebolus: float = 0.0
    proposed_dose: float = 0.0
    decision: str = DELIVERED
    final_dose: float = 0.0
    delivered_dose: float = 0.0
    w_lcb: float = math.nan
    s_lcb: float = math.nan
    q_alpha: float = math.nan
    reward: float = math.nan
    verdict: SafetyVerdict | None = field(default=None, repr=False, compare=False)

    @property
    def time_of_day(self) -> float:
        return self.clock % 1440.0

    def apply(self, verdict: SafetyVerdict) -> None:
        self.verdict = verdict
        self.decision = verdict.decision.value
        self.final_dose = verdict.final_dose
        self.delivered_dose = verdict.final_dose
        self.w_lcb, self.s_lcb, self.q_alpha = verdict.w_lcb, verdict.s_lcb, verdict.q_alpha


class Forecaster(Protocol):
    def predictor(self, window: FeatureWindow | None): ...


class Controller(Protocol):
    name: str

    learns: bool

    def decide(self, ctrl: ControllerState, ctx: StepContext) -> StepRecord: ...

    def learn(self, state_id: int, action_index: int, reward: float) -> None: ...


@dataclass
class TsodeController:
    """Thompson Sampling proposals filtered by the forecast safety gate."""

    table: PolicyTable
    icr: float
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    grid: ActionGrid = DEFAULT_GRID
    bins: BinSpec = field(default_factory=BinSpec)
    forecaster: Forecaster | None = None
    calibration: ConformalCalibration | None = None
    refractory: float = REFRACTORY_PERIOD
    factors: CorrectionFactors | None = None
    name: str = "tsode"
    learns: bool = True

    @classmethod
    def for_patient(cls, params: PatientParams, table: PolicyTable, **kwargs) -> TsodeController:
        """A controller dosing with the patient's own carb ratio and correction factors."""
        factors = CorrectionFactors(params.insulin_sensitivity, BIOAVAILABILITY * params.carb_sensitivity)
        return cls(table=table, icr=params.icr, factors=factors, **kwargs)

    def decide(self, ctrl: ControllerState, ctx: StepContext) -> StepRecord:
        return decide(ctrl, ctx, self)

    def learn(self, state_id: int, action_index: int, reward: float) -> None:
        self.table.update(state_id, action_index, reward)

    def predict_fn(self, ctrl: ControllerState):
        if self.forecaster is None or self.calibration is None:
            return None
        scaler = getattr(self.forecaster, "scaler", None)
        window = FeatureWindow.from_rows(list(ctrl.rows), scaler) if scaler is not None else None
        return self.forecaster.predictor(window)


def decide(ctrl: ControllerState, ctx: StepContext, controller: TsodeController) -> StepRecord:
    """
    One TSODE decision; ``ctrl`` must already hold this step's observation.

    Forecaster faults propagate to the caller.
    """
    record = StepRecord(step=ctx.step, clock=ctx.clock, bg_observed=ctx.bg_observed, iob=ctrl.iob, cob=ctrl.cob)
    if not ctrl.window_ready:
        record.decision = COLD_START
        return record

    record.trend = ctrl.trend
    record.state_id = discretize(ctx.bg_observed, record.trend, controller.bins)
    arm = select(controller.table, record.state_id, ctrl.policy_rng, ctrl.mode)
    record.policy_dose = controller.grid[arm]
    record.prebolus = prebolus(ctx.meals_now, controller.icr, controller.grid.maximum)
    record.proposed_dose = project(record.policy_dose + record.prebolus, controller.grid)

    if record.proposed_dose > 0 and ctrl.in_refractory(ctx.clock, controller.refractory):
        record.decision = REFRACTORY
        return record

    dist_fn = controller.predict_fn(ctrl) if record.proposed_dose > 0 else None
    record.apply(
        gate(
            record.proposed_dose,
            ctx.bg_observed,
            record.trend,
            ctrl.iob,
            ctx.time_of_day,
            dist_fn,
            controller.calibration,
            controller.safety,
            controller.grid,
            carbs_now=sum(meal.carbs for meal in ctx.meals_now),
            factors=controller.factors,
        )
    )
    record.action_index = arm
    return record
