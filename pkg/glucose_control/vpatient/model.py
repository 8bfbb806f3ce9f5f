"""
Minimal glucose-insulin-carbohydrate model used as the virtual testbed.

Plasma glucose follows Bergman-style first-order clearance towards the endogenous production
balance, lowered by insulin appearing from a two-compartment subcutaneous chain and raised by
carbohydrate appearing from a two-compartment gut chain. The right-hand side is linear, so a
larger bolus or a larger meal can never reverse the sign of its effect.
"""
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from glucose_control.utils.exceptions import ConfigurationFault, NumericalFault

from .params import PatientParams

MINUTES_PER_DAY = 1440.0
BIOAVAILABILITY = 0.9
GLUCOSE_BOUNDS = (20.0, 600.0)
CGM_BOUNDS = (40.0, 400.0)
SUBSTEP = 1.0  # min


@dataclass(frozen=True)
class MealEvent:
    time_of_day: float  # min in [0, 1440)
    carbs: float  # g

    def __post_init__(self):
        if not 0.0 <= self.time_of_day < MINUTES_PER_DAY:
            raise ConfigurationFault(f"Meal time {self.time_of_day} is outside [0, 1440) minutes.")
        if self.carbs < 0:
            raise ConfigurationFault(f"Meal carbs must be non-negative, got {self.carbs}.")


DEFAULT_MEALS: tuple[MealEvent, ...] = (
    MealEvent(8 * 60, 50.0),
    MealEvent(12 * 60 + 30, 70.0),
    MealEvent(16 * 60, 15.0),
    MealEvent(19 * 60, 60.0),
)


@dataclass(frozen=True)
class PatientState:
    plasma_glucose: float  # mg/dL
    insulin_sc1: float  # U
    insulin_sc2: float  # U
    gut_carbs1: float  # g
    gut_carbs2: float  # g
    clock: float = 0.0  # min since episode start
    carbs_absorbed: float = 0.0  # g, cumulative appearance in plasma

    def as_vector(self) -> np.ndarray:
        return np.array(
            [
                self.plasma_glucose,
                self.insulin_sc1,
                self.insulin_sc2,
                self.gut_carbs1,
                self.gut_carbs2,
                self.carbs_absorbed,
            ],
            dtype=np.float64,
        )


def meals_between(meals: Iterable[MealEvent], start: float, end: float, closed: str = "right") -> list[MealEvent]:
    """
    Meals whose daily occurrence falls inside the absolute interval between ``start`` and ``end``.

    ``closed="right"`` selects ``(start, end]`` (what the simulator ingests), ``closed="left"``
    selects ``[start, end)`` (what a controller announces at the step starting at ``start``).
    """
    due = []
    for meal in meals:
        day = math.floor(start / MINUTES_PER_DAY)
        while (occurrence := day * MINUTES_PER_DAY + meal.time_of_day) <= end:
            inside = start < occurrence <= end if closed == "right" else start <= occurrence < end
            if inside:
                due.append(meal)
            day += 1
    return due


def _derivative(x: np.ndarray, params: PatientParams, basal: float) -> np.ndarray:
    glucose, sc1, sc2, gut1, gut2, _ = x
    k_i = params.insulin_rate
    k_c = params.carb_rate
    carb_appearance = BIOAVAILABILITY * k_c * gut2
    return np.array(
        [
            -params.glucose_clearance_rate * glucose
            + params.endogenous_production
            - params.insulin_sensitivity * k_i * sc2
            + params.carb_sensitivity * carb_appearance,
            basal / 60.0 - k_i * sc1,
            k_i * (sc1 - sc2),
            -k_c * gut1,
            k_c * (gut1 - gut2),
            carb_appearance,
        ]
    )


def _rk4(x: np.ndarray, params: PatientParams, basal: float, h: float) -> np.ndarray:
    k1 = _derivative(x, params, basal)
    k2 = _derivative(x + 0.5 * h * k1, params, basal)
    k3 = _derivative(x + 0.5 * h * k2, params, basal)
    k4 = _derivative(x + h * k3, params, basal)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(
    state: PatientState,
    params: PatientParams,
    bolus: float,
    basal: float,
    meals_due: Sequence[MealEvent],
    dt: float,
) -> PatientState:
    """
    Advance the patient by ``dt`` minutes with fixed 1-min RK4 substeps.

    The bolus enters the first subcutaneous compartment at the start of the step; meals due in
    ``(clock, clock + dt]`` enter the first gut compartment at the end of it.

    :raise NumericalFault: if any compartment becomes non-finite.
    """
    if dt <= 0:
        raise ConfigurationFault(f"Step length must be positive, got {dt}.")
    if bolus < 0:
        raise ConfigurationFault(f"Bolus must be non-negative, got {bolus}.")

    x = state.as_vector()
    x[1] += bolus
    n_substeps = max(1, math.ceil(dt / SUBSTEP - 1e-9))
    h = dt / n_substeps
    for _ in range(n_substeps):
        x = _rk4(x, params, basal, h)

    x[3] += sum(meal.carbs for meal in meals_between(meals_due, state.clock, state.clock + dt))

    if not np.all(np.isfinite(x)):
        raise NumericalFault("Patient state blew up", clock=state.clock)

    low, high = GLUCOSE_BOUNDS
    return PatientState(
        plasma_glucose=float(min(max(x[0], low), high)),
        insulin_sc1=max(float(x[1]), 0.0),
        insulin_sc2=max(float(x[2]), 0.0),
        gut_carbs1=max(float(x[3]), 0.0),
        gut_carbs2=max(float(x[4]), 0.0),
        clock=state.clock + dt,
        carbs_absorbed=float(x[5]),
    )


def observe(state: PatientState, noise_rng: np.random.Generator, noise_sd: float) -> float:
    """CGM reading: plasma glucose plus Gaussian sensor noise, clamped to the reportable range."""
    if noise_sd < 0:
        raise ConfigurationFault(f"Sensor noise sd must be non-negative, got {noise_sd}.")
    reading = state.plasma_glucose + float(noise_rng.normal(0.0, noise_sd))
    low, high = CGM_BOUNDS
    return min(max(reading, low), high)


def equilibrium_from(params: PatientParams) -> PatientState:
    insulin = params.basal_rate / 60.0 / params.insulin_rate
    return PatientState(
        plasma_glucose=params.initial_bg,
        insulin_sc1=insulin,
        insulin_sc2=insulin,
        gut_carbs1=0.0,
        gut_carbs2=0.0,
    )


def simulate_open_loop(
    state: PatientState,
    params: PatientParams,
    n_steps: int,
    dt: float = 3.0,
    boluses: Mapping[int, float] | None = None,
    meals: Sequence[MealEvent] = (),
    basal: float | None = None,
) -> list[PatientState]:
    """Noise-free rollout; ``boluses`` maps step index to dose. Returns the ``n_steps`` successor states."""
    boluses = boluses or {}
    basal = params.basal_rate if basal is None else basal
    trajectory = []
    for index in range(n_steps):
        state = step(state, params, boluses.get(index, 0.0), basal, meals, dt)
        trajectory.append(state)
    return trajectory
