"""Insulin/carbs on board, the meal pre-bolus and projection onto the action grid."""
from collections.abc import Iterable, Sequence

from glucose_control.tspolicy import DEFAULT_GRID, ActionGrid
from glucose_control.utils.exceptions import ConfigurationFault
from glucose_control.vpatient import MealEvent

INSULIN_ACTION_DURATION = 240.0  # min
CARB_ABSORPTION_DURATION = 180.0  # min


def _linear_remaining(history: Iterable[tuple[float, float]], now: float, duration: float) -> float:
    return sum(amount * max(0.0, 1.0 - (now - time) / duration) for time, amount in history)


def iob_of(bolus_history: Iterable[tuple[float, float]], now: float, dia: float = INSULIN_ACTION_DURATION) -> float:
    """Insulin on board, U, with linear decay over ``dia`` minutes; history holds ``(time, dose)`` pairs."""
    return _linear_remaining(bolus_history, now, dia)


def cob_of(
    carb_history: Iterable[tuple[float, float]], now: float, duration: float = CARB_ABSORPTION_DURATION
) -> float:
    """Carbs on board, g, depleting linearly over ``duration`` minutes."""
    return _linear_remaining(carb_history, now, duration)


def prebolus(meals_due_now: Sequence[MealEvent], icr: float, cap: float = DEFAULT_GRID.maximum) -> float:
    """Feed-forward meal dose ``carbs / icr``, capped at the largest grid dose."""
    if icr <= 0:
        raise ConfigurationFault(f"Insulin-to-carb ratio must be positive, got {icr}.")
    return min(sum(meal.carbs for meal in meals_due_now) / icr, cap)


def project(dose: float, grid: ActionGrid = DEFAULT_GRID) -> float:
    """Nearest grid dose; exact midpoints round down."""
    if dose < 0:
        raise ConfigurationFault(f"Cannot project a negative dose ({dose}).")
    return grid.nearest(dose)
