from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from glucose_control.utils.exceptions import UsageFault
from glucose_control.vpatient import DEFAULT_MEALS, MealEvent, PatientParams, PatientState, simulate_open_loop

from .features import HORIZON, FeatureWindow
from .model import VARIANCE_FLOOR, ForecastDist


class OracleForecaster:
    """
    Perfect forecaster: noise-free rollouts of the true patient from its current true state.

    The episode runner hands over the true state before every decision through :meth:`observe_truth`;
    the feature window is accepted for interface compatibility and ignored.
    """

    def __init__(
        self,
        params: PatientParams,
        meals: Sequence[MealEvent] = DEFAULT_MEALS,
        dt: float = 3.0,
        horizon: int = HORIZON,
    ):
        self.params = params
        self.meals = tuple(meals)
        self.dt = dt
        self.horizon = horizon
        self._state: PatientState | None = None

    def observe_truth(self, state: PatientState) -> None:
        self._state = state

    def predict(self, window: FeatureWindow | None, dose: float) -> ForecastDist:
        if self._state is None:
            raise UsageFault("OracleForecaster.predict() called before observe_truth().")
        trajectory = simulate_open_loop(
            self._state, self.params, self.horizon, dt=self.dt, boluses={0: dose}, meals=self.meals
        )
        mu = np.array([s.plasma_glucose for s in trajectory])
        return ForecastDist(mu=mu, var=np.full(self.horizon, VARIANCE_FLOOR), dose=float(dose))

    def predictor(self, window: FeatureWindow | None) -> Callable[[float], ForecastDist]:
        return lambda dose: self.predict(window, dose)

    def predict_many(self, window: FeatureWindow | None, doses: Sequence[float]) -> list[ForecastDist]:
        return [self.predict(window, dose) for dose in doses]
