from .model import (
    BIOAVAILABILITY,
    DEFAULT_MEALS,
    MealEvent,
    PatientState,
    equilibrium_from,
    meals_between,
    observe,
    simulate_open_loop,
    step,
)
from .params import PatientParams, dump_params, load_cohort, load_params, make_cohort

__all__ = [
    "BIOAVAILABILITY",
    "DEFAULT_MEALS",
    "MealEvent",
    "PatientParams",
    "PatientState",
    "dump_params",
    "equilibrium_from",
    "load_cohort",
    "load_params",
    "make_cohort",
    "meals_between",
    "observe",
    "simulate_open_loop",
    "step",
]
