"""
Virtual adult parameter sets.

A parameter file is a plain ``KEY=value`` file (dotenv dialect) whose keys are exactly the
:class:`PatientParams` field names, e.g.::

    insulin_sensitivity=45
    carb_sensitivity=3.2
    ...
"""
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import environ
import numpy as np

from glucose_control.utils.exceptions import ConfigurationFault

logger = logging.getLogger(__name__)

COHORT_SIZE = 10
COHORT_SEED = 20240601
COHORT_SPREAD = 0.25

_POSITIVE_FIELDS = (
    "insulin_sensitivity",
    "carb_sensitivity",
    "glucose_clearance_rate",
    "insulin_absorption_halftime",
    "carb_absorption_halftime",
    "basal_rate",
    "icr",
    "initial_bg",
)


@dataclass(frozen=True)
class PatientParams:
    """
    Physiological constants of one virtual adult.

    ``endogenous_production`` is not an input: it is solved on construction so that the basal
    rate exactly balances clearance at ``initial_bg``.
    """

    insulin_sensitivity: float = 45.0  # mg/dL per U
    carb_sensitivity: float = 3.2  # mg/dL per g
    glucose_clearance_rate: float = 0.003  # 1/min
    insulin_absorption_halftime: float = 35.0  # min
    carb_absorption_halftime: float = 20.0  # min
    basal_rate: float = 1.0  # U/hr
    icr: float = 20.0  # g/U
    initial_bg: float = 180.0  # mg/dL
    endogenous_production: float = field(init=False)  # mg/dL/min

    def __post_init__(self):
        for name in _POSITIVE_FIELDS:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationFault(f"Patient parameter '{name}' must be finite and positive, got {value}.")
        production = self.glucose_clearance_rate * self.initial_bg + self.insulin_sensitivity * self.basal_rate / 60.0
        object.__setattr__(self, "endogenous_production", production)

    @property
    def insulin_rate(self) -> float:
        return math.log(2.0) / self.insulin_absorption_halftime

    @property
    def carb_rate(self) -> float:
        return math.log(2.0) / self.carb_absorption_halftime

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _input_field_names() -> list[str]:
    return [f.name for f in fields(PatientParams) if f.init]


def load_params(path: Path) -> PatientParams:
    """Read a parameter file; ``endogenous_production`` is recomputed, never trusted."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationFault(f"Patient parameter file '{path}' does not exist.")

    scheme = type("PatientEnv", (environ.Env,), {"ENVIRON": {}})
    scheme.read_env(str(path))
    env = scheme()

    unknown = set(scheme.ENVIRON) - {f.name for f in fields(PatientParams)}
    if unknown:
        raise ConfigurationFault(f"Unknown patient parameter(s) in '{path}': {', '.join(sorted(unknown))}.")
    missing = [name for name in _input_field_names() if name not in scheme.ENVIRON]
    if missing:
        raise ConfigurationFault(f"Missing patient parameter(s) in '{path}': {', '.join(missing)}.")

    return PatientParams(**{name: env.float(name) for name in _input_field_names()})


def dump_params(params: PatientParams, path: Path) -> None:
    lines = [f"{name}={value!r}" for name, value in params.as_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


def patient_id(index: int) -> str:
    return f"adult#{index + 1:03d}"


def make_cohort(
    size: int = COHORT_SIZE,
    seed: int = COHORT_SEED,
    spread: float = COHORT_SPREAD,
    base: PatientParams | None = None,
) -> dict[str, PatientParams]:
    """Perturb every input parameter of ``base`` uniformly within ``±spread``; ids are ``adult#001``..."""
    base = base or PatientParams()
    rng = np.random.default_rng(seed)
    names = _input_field_names()
    cohort = {}
    for index in range(size):
        factors = rng.uniform(1.0 - spread, 1.0 + spread, size=len(names))
        values = {name: getattr(base, name) * float(factor) for name, factor in zip(names, factors)}
        cohort[patient_id(index)] = replace(base, **values)
    return cohort


def load_cohort(patient_ids: list[str], cohort_dir: Path | None = None) -> dict[str, PatientParams]:
    """Resolve patient ids from ``<cohort_dir>/<id>.env`` files, falling back to the seeded generator."""
    generated = make_cohort(size=max(COHORT_SIZE, len(patient_ids)))
    cohort = {}
    for pid in patient_ids:
        path = Path(cohort_dir) / f"{pid}.env" if cohort_dir is not None else None
        if path is not None and path.is_file():
            cohort[pid] = load_params(path)
            logger.debug("Loaded %s from %s", pid, path)
        elif pid in generated:
            cohort[pid] = generated[pid]
        else:
            raise ConfigurationFault(
                f"Unknown patient '{pid}': no parameter file and not part of the generated cohort."
            )
    return cohort
