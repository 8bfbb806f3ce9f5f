"""Clinical outcome metrics of evaluation traces and the report tables built from them."""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, fields

import numpy as np
import pandas as pd

from glucose_control.utils.exceptions import ConfigurationFault
from glucose_control.utils.glycemia import SEVERE_HYPO_THRESHOLD, time_above, time_below, time_in_range

OK = "ok"
FAILED = "failed"
BG_COLUMNS = {"true": "bg_true", "observed": "bg_observed"}


@dataclass(frozen=True)
class MetricsRow:
    patient: str
    controller: str
    seed: int
    tir: float = math.nan  # % of samples in [70, 180]
    time_below_70: float = math.nan
    time_below_54: float = math.nan
    time_above_180: float = math.nan
    mean_bg: float = math.nan
    eval_days: float = math.nan
    status: str = OK
    error: str = ""

    @classmethod
    def failed(cls, patient: str, controller: str, seed: int, error: str) -> MetricsRow:
        return cls(patient, controller, seed, status=FAILED, error=error)


METRICS_COLUMNS = [f.name for f in fields(MetricsRow)]


def metrics(
    bg: Sequence[float], patient: str, controller: str, seed: int, dt: float = 3.0
) -> MetricsRow:
    """
    Outcome metrics of one evaluation trace.

    :raise ConfigurationFault: for an empty trace.
    """
    g = np.asarray(bg, dtype=np.float64)
    if g.size == 0:
        raise ConfigurationFault(f"No evaluation samples for {patient}/{controller}/seed {seed}.")
    return MetricsRow(
        patient=patient,
        controller=controller,
        seed=seed,
        tir=time_in_range(g),
        time_below_70=time_below(g),
        time_below_54=time_below(g, SEVERE_HYPO_THRESHOLD),
        time_above_180=time_above(g),
        mean_bg=float(np.mean(g)),
        eval_days=g.size * dt / 1440.0,
    )


def metrics_from_frame(
    frame: pd.DataFrame, patient: str, controller: str, seed: int, source: str = "true", dt: float | None = None
) -> MetricsRow:
    """Metrics recomputed from a trace table (the CSV written for the evaluation phase)."""
    if dt is None:
        dt = float(frame["clock"].diff().median()) if len(frame) > 1 else 3.0
    return metrics(frame[BG_COLUMNS[source]].to_numpy(), patient, controller, seed, dt)


def daily_tir(bg: Sequence[float], dt: float = 3.0) -> list[float]:
    """Time in range of every complete day; a trailing partial day is dropped."""
    per_day = int(round(1440.0 / dt))
    g = np.asarray(bg, dtype=np.float64)
    return [time_in_range(g[start:start + per_day]) for start in range(0, g.size - per_day + 1, per_day)]


def metrics_frame(rows: Sequence[MetricsRow]) -> pd.DataFrame:
    ordered = sorted(rows, key=lambda r: (r.patient, r.controller, r.seed))
    return pd.DataFrame([asdict(r) for r in ordered], columns=METRICS_COLUMNS)


def cohort_means(rows: Sequence[MetricsRow]) -> pd.DataFrame:
    """
    Per-controller arithmetic mean over the successful rows, labelled with the patients averaged.

    Failed cells are excluded and counted in ``n_failed``.
    """
    frame = metrics_frame(rows)
    summary = []
    for controller, group in frame.groupby("controller", sort=True):
        ok = group[group["status"] == OK]
        summary.append(
            {
                "controller": controller,
                "cohort": "mean(" + ",".join(sorted(ok["patient"].unique())) + ")",
                "n_rows": len(ok),
                "n_failed": len(group) - len(ok),
                **{
                    column: float(ok[column].mean()) if len(ok) else math.nan
                    for column in ("tir", "time_below_70", "time_below_54", "time_above_180", "mean_bg")
                },
            }
        )
    return pd.DataFrame(summary)
