from collections.abc import Sequence
from dataclasses import dataclass

from glucose_control.looprt import ControllerState, StepContext, StepRecord
from glucose_control.utils.exceptions import ConfigurationFault
from glucose_control.vpatient import MealEvent

MAX_MEAL_BOLUS = 10.0  # U


def meal_bolus_dose(meals_due: Sequence[MealEvent], icr: float, max_dose: float = MAX_MEAL_BOLUS) -> float:
    """Fixed-ratio meal insulin, no correction dosing."""
    if icr <= 0:
        raise ConfigurationFault(f"Insulin-to-carb ratio must be positive, got {icr}.")
    return min(sum(meal.carbs for meal in meals_due) / icr, max_dose)


@dataclass
class MealBolusController:
    icr: float
    max_dose: float = MAX_MEAL_BOLUS
    name: str = "mealbolus"
    learns: bool = False

    def decide(self, ctrl: ControllerState, ctx: StepContext) -> StepRecord:
        dose = meal_bolus_dose(ctx.meals_now, self.icr, self.max_dose)
        return StepRecord(
            step=ctx.step,
            clock=ctx.clock,
            bg_observed=ctx.bg_observed,
            iob=ctrl.iob,
            cob=ctrl.cob,
            trend=ctrl.trend,
            prebolus=dose,
            proposed_dose=dose,
            final_dose=dose,
            delivered_dose=dose,
        )

    def learn(self, state_id: int, action_index: int, reward: float) -> None:
        pass
