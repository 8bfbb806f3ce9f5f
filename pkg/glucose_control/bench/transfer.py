"""
Cross-patient transfer: warm up on source patients, pool what they learned and evaluate it,
frozen, on a patient none of the training data came from.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from slugify import slugify

from glucose_control.looprt import TsodeController, run_episode, write_trace_csv
from glucose_control.tspolicy import Mode, PolicyTable, dump_table_csv, merge_tables
from glucose_control.utils.exceptions import ConfigurationFault, NumericalFault
from glucose_control.vpatient import PatientParams, load_cohort

from .config import ExperimentConfig
from .experiment import Cell, CellResult, build_manifest, describe_error, write_manifest
from .metrics import MetricsRow, daily_tir, metrics, metrics_frame
from .pipeline import SafetyLayer, build_controller, check_provenance, episode_options, fit_safety_layer

logger = logging.getLogger(__name__)

TRANSFER_CONTROLLER = "tsode-transfer"


def transfer_roles(cfg: ExperimentConfig) -> tuple[tuple[str, ...], str]:
    """
    Explicit roles when configured, otherwise the first two patients as sources and the third as target.

    :raise ConfigurationFault: when no target can be derived.
    """
    sources = cfg.transfer_sources or cfg.patients[:2]
    target = cfg.transfer_target
    if not target:
        if len(cfg.patients) < 3:
            raise ConfigurationFault(
                f"The transfer scenario needs at least three patients or explicit roles, got {list(cfg.patients)}."
            )
        target = cfg.patients[2]
    return tuple(sources), target


def _metadata(
    patient: str, controller: str, seed: int, phase: str, cfg: ExperimentConfig, fault: str | None
) -> dict[str, Any]:
    return {"patient": patient, "controller": controller, "seed": seed, "phase": phase, "dt": cfg.dt, "fault": fault}


@dataclass
class TransferSeedResult:
    result: CellResult
    merged_table: PolicyTable | None = None
    source_tables: list[PolicyTable] | None = None
    layer: SafetyLayer | None = None


@dataclass
class TransferOutcome:
    output_dir: Path
    sources: tuple[str, ...]
    target: str
    seeds: list[TransferSeedResult]

    @property
    def rows(self) -> list[MetricsRow]:
        return [s.result.row for s in self.seeds]


def _transfer_seed(
    cfg: ExperimentConfig, sources: tuple[str, ...], target: str, cohort: dict[str, PatientParams], seed: int
) -> TransferSeedResult:
    out = cfg.output_path / "transfer"
    cell = Cell(target, TRANSFER_CONTROLLER, seed)
    options = episode_options(cfg)

    traces, tables = {}, []
    for source in sources:
        controller = build_controller("tsode", cohort[source], cfg)
        warm = run_episode(cohort[source], controller, cfg.days_warmup, seed, Mode.EXPLORE, **options)
        write_trace_csv(
            warm.records,
            out / "traces" / f"{slugify(source)}_source_seed{seed}_warmup.csv",
            _metadata(source, "tsode", seed, "warmup", cfg, warm.fault),
        )
        if not warm.completed:
            raise NumericalFault(f"Warm-up of source {source} stopped early: {warm.fault}")
        traces[source] = warm.records
        tables.append(controller.table)

    layer = fit_safety_layer(traces, cfg, seed)
    for records in (layer.train_records, layer.calibration_records, layer.test_records):
        check_provenance(records, sources)
    merged = merge_tables(tables)
    dump_table_csv(merged, out / f"merged_table_seed{seed}.csv")

    params = cohort[target]
    controller = TsodeController.for_patient(
        params,
        merged,
        safety=cfg.safety,
        forecaster=layer.model,
        calibration=layer.calibration,
        refractory=cfg.refractory,
    )
    evaluation = run_episode(params, controller, cfg.days_eval, seed, Mode.GREEDY, **options)
    write_trace_csv(
        evaluation.records,
        out / "traces" / f"{cell.slug}_eval.csv",
        {**_metadata(target, TRANSFER_CONTROLLER, seed, "eval", cfg, evaluation.fault), "sources": list(sources)},
    )
    if not evaluation.completed:
        raise NumericalFault(f"Evaluation on {target} stopped early: {evaluation.fault}")

    bg = [r.bg_true if cfg.metrics_source == "true" else r.bg_observed for r in evaluation.records]
    row = metrics(bg, target, TRANSFER_CONTROLLER, seed, cfg.dt)
    result = CellResult(cell, row, daily_tir=daily_tir([r.bg_true for r in evaluation.records], cfg.dt))
    return TransferSeedResult(result, merged, tables, layer)


def transfer_scenario(cfg: ExperimentConfig) -> TransferOutcome:
    """
    Pool source warm-up logs into one forecaster and calibration, merge their policy tables and
    evaluate greedily on the target, with no further learning, once per seed.
    """
    sources, target = transfer_roles(cfg)
    if target in sources:
        logger.warning("Transfer target %s is also a source; this is a self-transfer", target)
    out = cfg.output_path / "transfer"
    out.mkdir(parents=True, exist_ok=True)
    cohort = load_cohort(sorted({*sources, target}), Path(cfg.cohort_dir) if cfg.cohort_dir else None)
    logger.info("Transfer %s -> %s over %d seed(s)", ",".join(sources), target, len(cfg.seeds))

    seeds = []
    for seed in cfg.seeds:
        try:
            seeds.append(_transfer_seed(cfg, sources, target, cohort, seed))
        except Exception as error:
            logger.exception("Transfer seed %d failed", seed)
            failed = MetricsRow.failed(target, TRANSFER_CONTROLLER, seed, describe_error(error))
            seeds.append(TransferSeedResult(CellResult(Cell(target, TRANSFER_CONTROLLER, seed), failed)))

    frame = metrics_frame([s.result.row for s in seeds])
    frame.to_csv(out / "metrics.csv", index=False)
    manifest = build_manifest("transfer", cfg, [s.result for s in seeds])
    manifest["transfer"] = {"sources": list(sources), "target": target}
    write_manifest(manifest, out / "manifest.json")
    logger.info("Transfer finished: mean TIR on %s %.1f%%", target, frame["tir"].mean())
    return TransferOutcome(out, sources, target, seeds)
