"""Controller construction and the warm-up -> train -> calibrate steps shared by runs and transfers."""
from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from glucose_control.baselines import MealBolusController, PidController, TsmpcController
from glucose_control.forecaster import (
    ForecasterModel,
    TrainingHistory,
    TrainRecord,
    evaluate_rmse,
    extract_records,
    fit_forecaster,
    residuals,
    split_trace,
)
from glucose_control.forecaster.training import TraceStep
from glucose_control.looprt import (
    Controller,
    StepRecord,
    TsodeController,
    read_trace_csv,
    read_trace_metadata,
    records_from_frame,
)
from glucose_control.safegate import ConformalCalibration, calibrate, calibrate_residuals, empirical_coverage
from glucose_control.tspolicy import DEFAULT_GRID, BinSpec, PolicyTable
from glucose_control.utils.exceptions import ConfigurationFault
from glucose_control.vpatient import PatientParams

from .config import ExperimentConfig

logger = logging.getLogger(__name__)


def build_controller(name: str, params: PatientParams, cfg: ExperimentConfig) -> Controller:
    """A fresh controller for one patient; learning controllers start from the configured prior."""
    bins = BinSpec()
    if name == "mealbolus":
        return MealBolusController(params.icr)
    if name == "pid":
        return PidController(cfg.pid)
    if name == "tsmpc":
        table = PolicyTable(bins.n_states, len(cfg.tsmpc.multipliers), cfg.prior_mean, cfg.prior_var)
        return TsmpcController.for_patient(params, cfg.tsmpc, bins=bins, table=table)
    if name == "tsode":
        return TsodeController.for_patient(
            params,
            PolicyTable(bins.n_states, len(DEFAULT_GRID), cfg.prior_mean, cfg.prior_var),
            safety=cfg.safety,
            bins=bins,
            refractory=cfg.refractory,
        )
    raise ConfigurationFault(f"Unknown controller '{name}'.")


def episode_options(cfg: ExperimentConfig) -> dict[str, Any]:
    return {"dt": cfg.dt, "meals": cfg.meals, "noise_sd": cfg.noise_sd, "reward_steps": cfg.reward_steps}


@dataclass
class SafetyLayer:
    """A trained forecaster, its conformal calibration and the record sets that produced them."""

    model: ForecasterModel
    calibration: ConformalCalibration
    history: TrainingHistory
    train_records: list[TrainRecord]
    calibration_records: list[TrainRecord]
    test_records: list[TrainRecord]
    test_rmse: float = math.nan
    test_coverage: float = math.nan

    @property
    def sources(self) -> set[str]:
        records = (*self.train_records, *self.calibration_records, *self.test_records)
        return {r.source for r in records}


def split_records(traces: Mapping[str, Sequence[TraceStep]]) -> tuple[list[TrainRecord], ...]:
    """Chronological train/calibration/test split of every trace, pooled over sources in key order."""
    parts: tuple[list[TrainRecord], ...] = ([], [], [])
    for source in sorted(traces):
        for pooled, segment in zip(parts, split_trace(list(traces[source]))):
            pooled.extend(extract_records(segment, source=source))
    return parts


def read_traces(paths: Iterable[Path]) -> dict[str, list[StepRecord]]:
    """Trace CSVs keyed by the patient named in their sidecar, or by file stem without one."""
    traces: dict[str, list[StepRecord]] = {}
    for path in paths:
        if not Path(path).is_file():
            raise ConfigurationFault(f"Trace file '{path}' does not exist.")
        source = read_trace_metadata(path).get("patient", Path(path).stem)
        if source in traces:
            raise ConfigurationFault(f"More than one trace for {source}; pass one log per patient.")
        traces[source] = records_from_frame(read_trace_csv(path))
    return traces


def fit_safety_layer(traces: Mapping[str, Sequence[TraceStep]], cfg: ExperimentConfig, seed: int) -> SafetyLayer:
    """
    Train the forecaster on the first 70% of every warm-up log and calibrate it on the next 15%.

    The last 15% reports held-out RMSE and interval coverage.
    """
    train_records, calibration_records, test_records = split_records(traces)
    settings = cfg.forecaster
    model, history = fit_forecaster(
        train_records, epochs=settings.epochs, lr=settings.lr, batch_size=settings.batch_size, seed=seed
    )
    calibration = calibrate(model, calibration_records, cfg.safety.alpha, cfg.safety.per_step)
    layer = SafetyLayer(model, calibration, history, train_records, calibration_records, test_records)
    if test_records:
        layer.test_rmse = evaluate_rmse(model, test_records)
        layer.test_coverage = empirical_coverage(calibration, residuals(model, test_records))
        logger.info(
            "Safety layer for %s: test RMSE %.1f mg/dL, coverage %.3f",
            ",".join(sorted(traces)),
            layer.test_rmse,
            layer.test_coverage,
        )
    return layer


def check_provenance(records: Iterable[TrainRecord], allowed: Iterable[str]) -> None:
    """:raise ConfigurationFault: if any record came from a patient outside ``allowed``."""
    allowed = set(allowed)
    leaked = sorted({r.source for r in records} - allowed)
    if leaked:
        raise ConfigurationFault(f"Records from {', '.join(leaked)} leaked into a set restricted to {sorted(allowed)}.")


def dump_residuals_csv(abs_residuals: np.ndarray, path: Path) -> None:
    abs_residuals = np.atleast_2d(abs_residuals)
    columns = [f"r{k}" for k in range(1, abs_residuals.shape[1] + 1)]
    pd.DataFrame(abs_residuals, columns=columns).to_csv(path, index=False)


def load_calibration(path: Path, alpha: float, per_step: bool = False) -> ConformalCalibration:
    """Re-calibrate from a residual file written by :func:`dump_residuals_csv`."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationFault(f"Residual file '{path}' does not exist.")
    frame = pd.read_csv(path, float_precision="round_trip")
    return calibrate_residuals(frame.to_numpy(dtype=np.float64), alpha, per_step)
