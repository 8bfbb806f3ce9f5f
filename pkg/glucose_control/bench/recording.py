import math
from collections.abc import Sequence

from django.db import transaction

from .config import ExperimentConfig
from .metrics import MetricsRow
from .models import ExperimentRun, MetricsRecord

_METRIC_FIELDS = ("tir", "time_below_70", "time_below_54", "time_above_180", "mean_bg", "eval_days")


def _nullable(value: float) -> float | None:
    return None if math.isnan(value) else value


@transaction.atomic
def record_run(kind: str, cfg: ExperimentConfig, rows: Sequence[MetricsRow], output_dir: str) -> ExperimentRun:
    """Persist a finished run and its metrics rows; NaN metrics of failed cells are stored as NULL."""
    run = ExperimentRun.objects.create(
        kind=kind, config_hash=cfg.config_hash(), config=cfg.settings_dict(), output_dir=str(output_dir)
    )
    MetricsRecord.objects.bulk_create(
        MetricsRecord(
            run=run,
            patient=row.patient,
            controller=row.controller,
            seed=row.seed,
            status=row.status,
            error=row.error,
            **{name: _nullable(getattr(row, name)) for name in _METRIC_FIELDS},
        )
        for row in rows
    )
    return run
