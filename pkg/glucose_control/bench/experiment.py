"""
The warm-up/evaluation protocol swept over patients, controllers and seeds.

Output directory layout::

    traces/<patient>_<controller>_seed<k>_{warmup,eval}.csv  (+ .json sidecars)
    tables/<cell>.csv        learned policy tables
    models/<cell>.npz        trained forecasters
    metrics.csv              one row per cell
    cohort.csv               per-controller means over the configured patients
    daily_tir.csv            TIR of every evaluation day
    day_trace.csv            the first evaluation day of the first patient and seed
    manifest.json
"""
from __future__ import annotations

import json
import logging
import platform
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from slugify import slugify

import glucose_control
from glucose_control.looprt import EpisodeResult, run_episode, write_trace_csv
from glucose_control.tspolicy import Mode, dump_table_csv
from glucose_control.utils.exceptions import GlucoseControlError
from glucose_control.vpatient import PatientParams, load_cohort

from .config import ExperimentConfig
from .metrics import FAILED, MetricsRow, cohort_means, daily_tir, metrics, metrics_frame
from .pipeline import build_controller, episode_options, fit_safety_layer

logger = logging.getLogger(__name__)

DAY_TRACE_COLUMNS = ["controller", "step", "clock", "bg_true", "bg_observed", "delivered_dose"]


@dataclass(frozen=True, order=True)
class Cell:
    patient: str
    controller: str
    seed: int

    @property
    def slug(self) -> str:
        return f"{slugify(self.patient)}_{self.controller}_seed{self.seed}"


@dataclass
class CellResult:
    cell: Cell
    row: MetricsRow
    daily_tir: list[float] = field(default_factory=list)
    first_day: pd.DataFrame | None = None

    @property
    def failed(self) -> bool:
        return self.row.status == FAILED


@dataclass
class ExperimentOutcome:
    output_dir: Path
    results: list[CellResult]
    manifest: dict[str, Any]

    @property
    def rows(self) -> list[MetricsRow]:
        return [r.row for r in self.results]


def _phase_metadata(cell: Cell, phase: str, cfg: ExperimentConfig, result: EpisodeResult) -> dict[str, Any]:
    return {
        "patient": cell.patient,
        "controller": cell.controller,
        "seed": cell.seed,
        "phase": phase,
        "dt": cfg.dt,
        "config_hash": cfg.config_hash(),
        "fault": result.fault,
    }


def describe_error(error: Exception) -> str:
    """Own faults read as their message, anything else is prefixed with its type."""
    if isinstance(error, GlucoseControlError):
        return str(error)
    return f"{type(error).__name__}: {error}"


def _failed(cell: Cell, error: str) -> CellResult:
    logger.error("Cell %s failed: %s", cell.slug, error)
    return CellResult(cell, MetricsRow.failed(cell.patient, cell.controller, cell.seed, error))


def run_cell(cell: Cell, params: PatientParams, cfg: ExperimentConfig) -> CellResult:
    """
    Warm up in explore mode, then evaluate greedily from where the warm-up left off.

    TSODE trains and calibrates its forecaster on the warm-up log in between. Any fault is
    recorded on the returned row instead of propagating.
    """
    out = cfg.output_path
    options = episode_options(cfg)
    try:
        controller = build_controller(cell.controller, params, cfg)
        warm = run_episode(params, controller, cfg.days_warmup, cell.seed, Mode.EXPLORE, **options)
        write_trace_csv(
            warm.records, out / "traces" / f"{cell.slug}_warmup.csv", _phase_metadata(cell, "warmup", cfg, warm)
        )
        if not warm.completed:
            return _failed(cell, f"warm-up stopped early: {warm.fault}")

        if cell.controller == "tsode":
            layer = fit_safety_layer({cell.patient: warm.records}, cfg, cell.seed)
            controller.forecaster, controller.calibration = layer.model, layer.calibration
            (out / "models").mkdir(parents=True, exist_ok=True)
            layer.model.save(out / "models" / f"{cell.slug}.npz")
        if getattr(controller, "table", None) is not None:
            (out / "tables").mkdir(parents=True, exist_ok=True)
            dump_table_csv(controller.table, out / "tables" / f"{cell.slug}.csv")

        evaluation = run_episode(
            params,
            controller,
            cfg.days_eval,
            cell.seed,
            Mode.GREEDY,
            initial_state=warm.final_state,
            runtime=warm.runtime,
            **options,
        )
        write_trace_csv(
            evaluation.records, out / "traces" / f"{cell.slug}_eval.csv", _phase_metadata(cell, "eval", cfg, evaluation)
        )
        if not evaluation.completed:
            return _failed(cell, f"evaluation stopped early: {evaluation.fault}")
    except Exception as error:
        logger.exception("Cell %s aborted", cell.slug)
        return _failed(cell, describe_error(error))

    records = evaluation.records
    bg = [r.bg_true if cfg.metrics_source == "true" else r.bg_observed for r in records]
    per_day = int(round(1440.0 / cfg.dt))
    first_day = pd.DataFrame(
        [
            (cell.controller, r.step, r.clock, r.bg_true, r.bg_observed, r.delivered_dose)
            for r in records[:per_day]
        ],
        columns=DAY_TRACE_COLUMNS,
    )
    return CellResult(
        cell,
        metrics(bg, cell.patient, cell.controller, cell.seed, cfg.dt),
        daily_tir=daily_tir([r.bg_true for r in records], cfg.dt),
        first_day=first_day,
    )


def run_cells(cells: list[Cell], cohort: dict[str, PatientParams], cfg: ExperimentConfig) -> list[CellResult]:
    """Run every cell, in worker processes when configured; results come back in cell order."""
    if cfg.workers <= 1 or len(cells) <= 1:
        return [run_cell(cell, cohort[cell.patient], cfg) for cell in cells]

    results = []
    with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
        futures = {executor.submit(run_cell, cell, cohort[cell.patient], cfg): cell for cell in cells}
        for future in as_completed(futures):
            cell = futures[future]
            try:
                results.append(future.result())
            except Exception as error:
                results.append(_failed(cell, describe_error(error)))
    return sorted(results, key=lambda r: r.cell)


def build_manifest(kind: str, cfg: ExperimentConfig, results: list[CellResult]) -> dict[str, Any]:
    return {
        "kind": kind,
        "config_hash": cfg.config_hash(),
        "config": cfg.settings_dict(),
        "versions": {
            "glucose_control": glucose_control.__version__,
            "numpy": np.__version__,
            "pandas": pd.__version__,
            "python": platform.python_version(),
        },
        "seeds": list(cfg.seeds),
        "cells": [
            {
                "patient": r.cell.patient,
                "controller": r.cell.controller,
                "seed": r.cell.seed,
                "status": r.row.status,
                "error": r.row.error,
            }
            for r in results
        ],
    }


def write_manifest(manifest: dict[str, Any], path: Path) -> None:
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def write_reports(results: list[CellResult], cfg: ExperimentConfig, out: Path) -> None:
    rows = [r.row for r in results]
    metrics_frame(rows).to_csv(out / "metrics.csv", index=False)
    cohort_means(rows).to_csv(out / "cohort.csv", index=False)
    pd.DataFrame(
        [
            (r.cell.patient, r.cell.controller, r.cell.seed, day + 1, tir)
            for r in results
            for day, tir in enumerate(r.daily_tir)
        ],
        columns=["patient", "controller", "seed", "day", "tir"],
    ).to_csv(out / "daily_tir.csv", index=False)
    first = [
        r.first_day
        for r in results
        if r.first_day is not None and r.cell.patient == cfg.patients[0] and r.cell.seed == cfg.seeds[0]
    ]
    day_trace = pd.concat(first, ignore_index=True) if first else pd.DataFrame(columns=DAY_TRACE_COLUMNS)
    day_trace.to_csv(out / "day_trace.csv", index=False)


def run_experiment(cfg: ExperimentConfig) -> ExperimentOutcome:
    """Sweep every (patient, controller, seed) cell and write the report files."""
    out = cfg.output_path
    (out / "traces").mkdir(parents=True, exist_ok=True)
    cohort = load_cohort(list(cfg.patients), Path(cfg.cohort_dir) if cfg.cohort_dir else None)
    cells = [Cell(p, c, s) for p in cfg.patients for c in cfg.controllers for s in cfg.seeds]
    logger.info(
        "Experiment %s: %d cells, %g + %g days, %d worker(s)",
        cfg.config_hash()[:12],
        len(cells),
        cfg.days_warmup,
        cfg.days_eval,
        cfg.workers,
    )

    results = run_cells(cells, cohort, cfg)
    write_reports(results, cfg, out)
    manifest = build_manifest("run", cfg, results)
    write_manifest(manifest, out / "manifest.json")

    failed = sum(r.failed for r in results)
    logger.info("Experiment finished: %d cells, %d failed, reports in %s", len(results), failed, out)
    return ExperimentOutcome(out, results, manifest)

