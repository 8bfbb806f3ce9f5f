from .mealbolus import MAX_MEAL_BOLUS, MealBolusController, meal_bolus_dose
from .pid import PidConfig, PidController, PidState, pid_controller
from .tsmpc import (
    DEFAULT_MULTIPLIERS,
    AnalyticModel,
    TsmpcConfig,
    TsmpcController,
    depot_appearance,
    mpc_dose,
    tsmpc_controller,
)
from .tuning import TuningResult, tune_pid

__all__ = [
    "DEFAULT_MULTIPLIERS",
    "MAX_MEAL_BOLUS",
    "AnalyticModel",
    "MealBolusController",
    "PidConfig",
    "PidController",
    "PidState",
    "TsmpcConfig",
    "TsmpcController",
    "TuningResult",
    "depot_appearance",
    "meal_bolus_dose",
    "mpc_dose",
    "pid_controller",
    "tsmpc_controller",
    "tune_pid",
]
