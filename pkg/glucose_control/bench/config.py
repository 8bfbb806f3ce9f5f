"""
Experiment configuration.

A config file is a single ``KEY=value`` file in the dotenv dialect; keys are the upper-cased
field names of :class:`ExperimentConfigSerializer`, list values are comma separated::

    PATIENTS=adult#001,adult#002,adult#003
    CONTROLLERS=pid,tsode
    DAYS_WARMUP=30
    SEEDS=0,1,2
    MEALS=08:00=50,12:30=70,16:00=15,19:00=60
    ALPHA=0.1

Every key is optional; anything left out takes the default declared on the serializer.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from django.conf import settings

import environ
from rest_framework import serializers

from glucose_control.baselines import PidConfig, TsmpcConfig
from glucose_control.forecaster import HORIZON
from glucose_control.safegate import SafetyConfig
from glucose_control.utils.exceptions import ConfigurationFault
from glucose_control.vpatient import MealEvent
from glucose_control.vpatient.params import COHORT_SIZE, patient_id

from .validators import (
    DistinctValuesValidator,
    ExclusiveMinValueValidator,
    TransferRolesValidator,
    parse_meal,
    validate_meals,
    validate_night_window,
)

CONTROLLERS = ("mealbolus", "pid", "tsmpc", "tsode")
METRIC_SOURCES = ("true", "observed")
DEFAULT_MEALS = ["08:00=50", "12:30=70", "16:00=15", "19:00=60"]


class ExperimentConfigSerializer(serializers.Serializer):
    """Field-level ranges and cross-field checks for an experiment config mapping."""

    patients = serializers.ListField(
        child=serializers.CharField(), min_length=1, default=[patient_id(i) for i in range(COHORT_SIZE)]
    )
    controllers = serializers.ListField(
        child=serializers.ChoiceField(choices=CONTROLLERS), min_length=1, default=list(CONTROLLERS)
    )
    seeds = serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=1, default=[0])
    days_warmup = serializers.FloatField(min_value=0.05, default=30.0)
    days_eval = serializers.FloatField(min_value=0.05, default=14.0)
    dt = serializers.FloatField(min_value=0.5, max_value=15.0, default=3.0)
    noise_sd = serializers.FloatField(min_value=0.0, default=5.0)
    meals = serializers.ListField(child=serializers.CharField(), default=DEFAULT_MEALS, validators=[validate_meals])
    reward_steps = serializers.IntegerField(min_value=1, default=10)
    refractory = serializers.FloatField(min_value=0.0, default=20.0)
    prior_mean = serializers.FloatField(default=0.0)
    prior_var = serializers.FloatField(min_value=1e-6, default=1.0)

    floor_bg = serializers.FloatField(default=90.0, validators=[ExclusiveMinValueValidator(40.0)])
    gamma = serializers.FloatField(default=1.5, validators=[ExclusiveMinValueValidator(0.0)])
    alpha = serializers.FloatField(min_value=0.001, max_value=0.5, default=0.1)
    decay_lambda = serializers.FloatField(min_value=0.0, default=0.15)
    bypass_bg = serializers.FloatField(default=250.0)
    bypass_trend = serializers.FloatField(default=0.5)
    guard_bg_min = serializers.FloatField(default=90.0)
    guard_trend_min = serializers.FloatField(default=-1.0)
    guard_trend_bg = serializers.FloatField(default=120.0)
    iob_cap = serializers.FloatField(min_value=0.0, default=5.0)
    eventual_floor = serializers.FloatField(default=100.0, validators=[ExclusiveMinValueValidator(40.0)])
    night_window = serializers.ListField(
        child=serializers.FloatField(min_value=0.0, max_value=1440.0), default=[0.0, 360.0],
        validators=[validate_night_window],
    )
    night_cap = serializers.FloatField(min_value=0.0, default=0.5)
    bisection_tol = serializers.FloatField(min_value=1e-4, default=0.01)
    conformal_per_step = serializers.BooleanField(default=False)

    forecaster_epochs = serializers.IntegerField(min_value=0, default=30)
    forecaster_lr = serializers.FloatField(min_value=0.0, default=1e-3)
    forecaster_batch_size = serializers.IntegerField(min_value=1, default=64)

    pid_setpoint = serializers.FloatField(default=120.0)
    pid_kp = serializers.FloatField(min_value=0.0, default=0.004)
    pid_ki = serializers.FloatField(min_value=0.0, default=2e-5)
    pid_kd = serializers.FloatField(min_value=0.0, default=0.1)

    tsmpc_setpoint = serializers.FloatField(default=120.0)
    tsmpc_dose_weight = serializers.FloatField(min_value=0.0, default=2000.0)
    tsmpc_min_bg = serializers.FloatField(default=80.0)

    transfer_sources = serializers.ListField(child=serializers.CharField(), default=list)
    transfer_target = serializers.CharField(allow_blank=True, default="")

    metrics_source = serializers.ChoiceField(choices=METRIC_SOURCES, default="true")
    output_dir = serializers.CharField(allow_blank=True, default="")
    cohort_dir = serializers.CharField(allow_blank=True, default="")
    workers = serializers.IntegerField(min_value=1, allow_null=True, default=None)

    class Meta:
        validators = (
            DistinctValuesValidator(("patients", "controllers", "seeds", "transfer_sources")),
            TransferRolesValidator(),
        )


@dataclass(frozen=True)
class ForecasterSettings:
    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 64


@dataclass(frozen=True)
class ExperimentConfig:
    patients: tuple[str, ...]
    controllers: tuple[str, ...] = CONTROLLERS
    seeds: tuple[int, ...] = (0,)
    days_warmup: float = 30.0
    days_eval: float = 14.0
    dt: float = 3.0
    noise_sd: float = 5.0
    meals: tuple[MealEvent, ...] = ()
    reward_steps: int = 10
    refractory: float = 20.0
    prior_mean: float = 0.0
    prior_var: float = 1.0
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    forecaster: ForecasterSettings = field(default_factory=ForecasterSettings)
    pid: PidConfig = field(default_factory=PidConfig)
    tsmpc: TsmpcConfig = field(default_factory=TsmpcConfig)
    transfer_sources: tuple[str, ...] = ()
    transfer_target: str = ""
    metrics_source: str = "true"
    output_dir: str = ""
    cohort_dir: str = ""
    workers: int = 1

    @classmethod
    def from_validated(cls, data: dict[str, Any]) -> ExperimentConfig:
        safety = SafetyConfig(
            floor_bg=data["floor_bg"],
            gamma=data["gamma"],
            alpha=data["alpha"],
            decay_lambda=data["decay_lambda"],
            horizon=HORIZON,
            dt=data["dt"],
            bypass_bg=data["bypass_bg"],
            bypass_trend=data["bypass_trend"],
            guard_bg_min=data["guard_bg_min"],
            guard_trend_min=data["guard_trend_min"],
            guard_trend_bg=data["guard_trend_bg"],
            iob_cap=data["iob_cap"],
            eventual_floor=data["eventual_floor"],
            night_window=tuple(data["night_window"]),
            night_cap=data["night_cap"],
            bisection_tol=data["bisection_tol"],
            per_step=data["conformal_per_step"],
        )
        return cls(
            patients=tuple(data["patients"]),
            controllers=tuple(data["controllers"]),
            seeds=tuple(data["seeds"]),
            days_warmup=data["days_warmup"],
            days_eval=data["days_eval"],
            dt=data["dt"],
            noise_sd=data["noise_sd"],
            meals=tuple(parse_meal(entry) for entry in data["meals"]),
            reward_steps=data["reward_steps"],
            refractory=data["refractory"],
            prior_mean=data["prior_mean"],
            prior_var=data["prior_var"],
            safety=safety,
            forecaster=ForecasterSettings(
                data["forecaster_epochs"], data["forecaster_lr"], data["forecaster_batch_size"]
            ),
            pid=PidConfig(setpoint=data["pid_setpoint"], kp=data["pid_kp"], ki=data["pid_ki"], kd=data["pid_kd"]),
            tsmpc=TsmpcConfig(
                dt=data["dt"],
                setpoint=data["tsmpc_setpoint"],
                dose_weight=data["tsmpc_dose_weight"],
                min_bg=data["tsmpc_min_bg"],
            ),
            transfer_sources=tuple(data["transfer_sources"]),
            transfer_target=data["transfer_target"],
            metrics_source=data["metrics_source"],
            output_dir=data["output_dir"] or str(settings.GLUCOSE_CONTROL_OUTPUT_DIR),
            cohort_dir=data["cohort_dir"] or str(settings.GLUCOSE_CONTROL_COHORT_DIR),
            workers=data["workers"] or settings.GLUCOSE_CONTROL_WORKERS,
        )

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)

    def settings_dict(self) -> dict[str, Any]:
        """Everything that shapes results; output location and worker count excluded."""
        return {k: v for k, v in self.as_dict().items() if k not in ("output_dir", "workers")}

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.settings_dict(), sort_keys=True, default=str).encode()).hexdigest()


def read_config_file(path: Path) -> dict[str, Any]:
    """Parse ``path`` into an isolated mapping; list-valued keys come back as lists."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationFault(f"Experiment config '{path}' does not exist.")
    scheme = type("ExperimentEnv", (environ.Env,), {"ENVIRON": {}})
    scheme.read_env(str(path))
    env = scheme()
    list_fields = {
        name.upper() for name, f in ExperimentConfigSerializer().fields.items() if isinstance(f, serializers.ListField)
    }
    return {key: env.list(key) if key in list_fields else value for key, value in scheme.ENVIRON.items()}


def load_experiment_config(path: Path | None = None, **overrides: Any) -> ExperimentConfig:
    """
    Read, override and validate an experiment config.

    ``overrides`` use lower-case field names and already-typed values (command-line flags).

    :raise ConfigurationFault: with the serializer's error dict for unknown keys or invalid values.
    """
    raw = read_config_file(path) if path is not None else {}
    data = {key.lower(): value for key, value in raw.items()}
    data.update({key: value for key, value in overrides.items() if value is not None})

    known = set(ExperimentConfigSerializer().fields)
    unknown = sorted(set(data) - known)
    if unknown:
        errors = {key: ["Unknown configuration key."] for key in unknown}
        raise ConfigurationFault(f"Unknown experiment config key(s): {', '.join(k.upper() for k in unknown)}.", errors)

    serializer = ExperimentConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigurationFault(f"Invalid experiment configuration: {dict(serializer.errors)}", serializer.errors)
    return ExperimentConfig.from_validated(serializer.validated_data)
