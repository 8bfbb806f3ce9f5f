from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from glucose_control.tspolicy import Mode, shaped_reward
from glucose_control.utils.exceptions import ConfigurationFault, EpisodeAborted, GlucoseControlError, NumericalFault
from glucose_control.vpatient import (
    DEFAULT_MEALS,
    MealEvent,
    PatientParams,
    PatientState,
    equilibrium_from,
    meals_between,
    observe,
    step,
)

from .runtime import NO_ACTION, Controller, ControllerState, StepContext, StepRecord

logger = logging.getLogger(__name__)

DT = 3.0
STEPS_PER_DAY = 480
SENSOR_NOISE_SD = 5.0  # mg/dL
REWARD_STEPS = 10
_PHASE_KEYS = {Mode.EXPLORE: 0, Mode.GREEDY: 1}


@dataclass
class EpisodeResult:
    records: list[StepRecord]
    final_state: PatientState
    runtime: ControllerState
    fault: str | None = None

    @property
    def completed(self) -> bool:
        return self.fault is None


def phase_streams(seed: int, mode: Mode) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (sensor, policy) generators for one phase of one seed."""
    sensor, policy = np.random.SeedSequence([seed, _PHASE_KEYS[Mode(mode)]]).spawn(2)
    return np.random.default_rng(sensor), np.random.default_rng(policy)


def run_episode(
    params: PatientParams,
    controller: Controller,
    days: float,
    seed: int,
    mode: Mode | str = Mode.EXPLORE,
    *,
    dt: float = DT,
    meals: Sequence[MealEvent] = DEFAULT_MEALS,
    noise_sd: float = SENSOR_NOISE_SD,
    initial_state: PatientState | None = None,
    runtime: ControllerState | None = None,
    truth_hook: Callable[[PatientState], None] | None = None,
    reward_steps: int = REWARD_STEPS,
) -> EpisodeResult:
    """
    Drive the observe -> decide -> deliver -> simulate cycle for ``days`` days.

    Passing the previous phase's ``final_state`` and ``runtime`` continues an episode; the clock
    carries on from the state. In explore mode a learning controller is credited, for every gated
    decision, with the shaped reward of the next ``reward_steps`` observed readings.

    A simulator fault ends the episode early with the partial trace and ``fault`` set; controller
    (forecaster) faults raise :class:`EpisodeAborted` carrying the partial trace.
    """
    if days <= 0:
        raise ConfigurationFault(f"An episode needs a positive number of days, got {days}.")
    mode = Mode(mode)
    state = initial_state if initial_state is not None else equilibrium_from(params)
    sensor_rng, policy_rng = phase_streams(seed, mode)
    if runtime is None:
        runtime = ControllerState(dt=dt)
    runtime.mode = mode
    runtime.policy_rng = policy_rng
    learning = mode is Mode.EXPLORE and getattr(controller, "learns", False)

    first_step = int(round(state.clock / dt))
    n_steps = int(round(days * 1440.0 / dt))
    records: list[StepRecord] = []
    observed: list[float] = []
    fault = None
    logger.info("Episode start: %s, %s mode, %g days, seed %d", controller.name, mode.value, days, seed)

    for index in range(n_steps):
        clock = state.clock
        if truth_hook is not None:
            truth_hook(state)
        bg_observed = observe(state, sensor_rng, noise_sd)
        observed.append(bg_observed)
        meals_now = tuple(meals_between(meals, clock, clock + dt, closed="left"))
        runtime.observe(bg_observed, clock, meals_now)

        try:
            record = controller.decide(runtime, StepContext(first_step + index, clock, bg_observed, meals_now))
        except GlucoseControlError as exc:
            raise EpisodeAborted(f"{controller.name} failed at step {first_step + index}: {exc}", records) from exc
        record.bg_true = state.plasma_glucose
        records.append(record)

        if learning and index >= reward_steps:
            credited = records[index - reward_steps]
            if credited.state_id != NO_ACTION and credited.action_index != NO_ACTION:
                credited.reward = shaped_reward(observed[-reward_steps:])
                controller.learn(credited.state_id, credited.action_index, credited.reward)

        try:
            state = step(state, params, record.delivered_dose, params.basal_rate, meals, dt)
        except NumericalFault as exc:
            fault = str(exc)
            logger.warning("Episode stopped early at step %d: %s", record.step, fault)
            break
        runtime.register_delivery(clock, record.delivered_dose)

    logger.info("Episode end: %s, %d steps", controller.name, len(records))
    return EpisodeResult(records=records, final_state=state, runtime=runtime, fault=fault)
