from .accounting import CARB_ABSORPTION_DURATION, INSULIN_ACTION_DURATION, cob_of, iob_of, prebolus, project
from .episode import DT, SENSOR_NOISE_SD, STEPS_PER_DAY, EpisodeResult, phase_streams, run_episode
from .runtime import (
    COLD_START,
    NO_ACTION,
    REFRACTORY,
    REFRACTORY_PERIOD,
    Controller,
    ControllerState,
    StepContext,
    StepRecord,
    TsodeController,
    decide,
)
from .trace import (
    TRACE_COLUMNS,
    read_trace_csv,
    read_trace_metadata,
    records_from_frame,
    trace_frame,
    write_trace_csv,
)

__all__ = [
    "CARB_ABSORPTION_DURATION",
    "COLD_START",
    "DT",
    "INSULIN_ACTION_DURATION",
    "NO_ACTION",
    "REFRACTORY",
    "REFRACTORY_PERIOD",
    "SENSOR_NOISE_SD",
    "STEPS_PER_DAY",
    "TRACE_COLUMNS",
    "Controller",
    "ControllerState",
    "EpisodeResult",
    "StepContext",
    "StepRecord",
    "TsodeController",
    "cob_of",
    "decide",
    "iob_of",
    "phase_streams",
    "prebolus",
    "project",
    "read_trace_csv",
    "read_trace_metadata",
    "records_from_frame",
    "run_episode",
    "trace_frame",
    "write_trace_csv",
]
