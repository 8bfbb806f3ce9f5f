"""PID regulation of observed glucose towards a setpoint, one dose per control step."""
from __future__ import annotations

from dataclasses import dataclass, field

from glucose_control.looprt import ControllerState, StepContext, StepRecord
from glucose_control.utils.exceptions import ConfigurationFault


@dataclass(frozen=True)
class PidConfig:
    setpoint: float = 120.0  # mg/dL
    kp: float = 0.004  # U per mg/dL
    ki: float = 2e-5  # U per mg/dL/min
    kd: float = 0.1  # U per mg/dL/min
    integral_limit: float = 50_000.0  # mg/dL*min
    max_dose: float = 3.0  # U per decision

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ConfigurationFault(f"PID gains must be non-negative, got {(self.kp, self.ki, self.kd)}.")
        if not 0 <= self.integral_limit < float("inf") or self.max_dose < 0:
            raise ConfigurationFault("PID clamps must be finite and non-negative.")


@dataclass
class PidState:
    integral: float = 0.0
    previous_bg: float | None = None


def pid_controller(bg_obs: float, state: PidState, cfg: PidConfig, dt: float) -> float:
    """
    ``u = kp e + ki int(e) + kd d(bg)/dt`` with ``e = bg - setpoint``, clamped to ``[0, max_dose]``.

    The derivative acts on the measurement; the integral is clamped to ``+-integral_limit``.
    Updates ``state`` in place.
    """
    if dt <= 0:
        raise ConfigurationFault(f"Control interval must be positive, got {dt}.")
    error = bg_obs - cfg.setpoint
    state.integral = min(max(state.integral + error * dt, -cfg.integral_limit), cfg.integral_limit)
    derivative = 0.0 if state.previous_bg is None else (bg_obs - state.previous_bg) / dt
    state.previous_bg = bg_obs
    u = cfg.kp * error + cfg.ki * state.integral + cfg.kd * derivative
    return min(max(u, 0.0), cfg.max_dose)


@dataclass
class PidController:
    config: PidConfig = field(default_factory=PidConfig)
    state: PidState = field(default_factory=PidState)
    name: str = "pid"
    learns: bool = False

    def decide(self, ctrl: ControllerState, ctx: StepContext) -> StepRecord:
        dose = pid_controller(ctx.bg_observed, self.state, self.config, ctrl.dt)
        return StepRecord(
            step=ctx.step,
            clock=ctx.clock,
            bg_observed=ctx.bg_observed,
            iob=ctrl.iob,
            cob=ctrl.cob,
            trend=ctrl.trend,
            policy_dose=dose,
            proposed_dose=dose,
            final_dose=dose,
            delivered_dose=dose,
        )

    def learn(self, state_id: int, action_index: int, reward: float) -> None:
        pass
