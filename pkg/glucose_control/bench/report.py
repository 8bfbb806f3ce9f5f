"""Second-pass metrics recomputed from the trace files of a finished run."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from glucose_control.looprt import read_trace_csv, read_trace_metadata
from glucose_control.utils.exceptions import ConfigurationFault

from .metrics import OK, MetricsRow, metrics_frame, metrics_from_frame

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["tir", "time_below_70", "time_below_54", "time_above_180", "mean_bg", "eval_days"]


def recompute_metrics(output_dir: Path, source: str = "true") -> pd.DataFrame:
    """One metrics row per evaluation trace under ``<output_dir>/traces``."""
    paths = sorted((Path(output_dir) / "traces").glob("*_eval.csv"))
    if not paths:
        raise ConfigurationFault(f"No evaluation traces under {output_dir}.")
    rows = []
    for path in paths:
        meta = read_trace_metadata(path)
        if not {"patient", "controller", "seed"} <= set(meta):
            raise ConfigurationFault(f"Trace {path.name} has no usable metadata sidecar.")
        patient, controller, seed = meta["patient"], meta["controller"], int(meta["seed"])
        if meta.get("fault"):
            rows.append(MetricsRow.failed(patient, controller, seed, f"evaluation stopped early: {meta['fault']}"))
            continue
        rows.append(metrics_from_frame(read_trace_csv(path), patient, controller, seed, source, meta.get("dt")))
    logger.info("Recomputed metrics from %d traces", len(rows))
    return metrics_frame(rows)


def max_discrepancy(reported: pd.DataFrame, recomputed: pd.DataFrame) -> float:
    """Largest absolute difference of any metric between the two tables over the successful cells."""
    keys = ["patient", "controller", "seed"]
    ok_reported = reported[reported["status"] == OK]
    ok_recomputed = recomputed[recomputed["status"] == OK]
    joined = ok_reported.merge(ok_recomputed, on=keys, suffixes=("_reported", "_recomputed"))
    if len(joined) != len(ok_reported):
        raise ConfigurationFault("Reported cells are missing from the recomputed metrics.")
    if joined.empty:
        return 0.0
    differences = [
        np.abs(joined[f"{c}_reported"].to_numpy() - joined[f"{c}_recomputed"].to_numpy()) for c in METRIC_COLUMNS
    ]
    return float(np.max(differences))
