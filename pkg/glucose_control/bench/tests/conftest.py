import pytest

from glucose_control.bench.models import ExperimentRun, MetricsRecord

from .factories import ExperimentRunFactory, MetricsRecordFactory


@pytest.fixture
def experiment_run(db) -> ExperimentRun:
    """Run with a successful PID and TSODE cell for adult#001 and a failed TSODE cell for adult#002."""
    run = ExperimentRunFactory()
    MetricsRecordFactory(run=run, patient="adult#001", controller="pid", tir=71.5)
    MetricsRecordFactory(run=run, patient="adult#001", controller="tsode", tir=80.25)
    MetricsRecordFactory(
        run=run,
        patient="adult#002",
        controller="tsode",
        status=MetricsRecord.Status.FAILED,
        tir=None,
        time_below_70=None,
        time_below_54=None,
        time_above_180=None,
        mean_bg=None,
        eval_days=None,
        error="evaluation stopped early: NumericalFault",
    )
    return run


@pytest.fixture
def other_run(db) -> ExperimentRun:
    run = ExperimentRunFactory(kind=ExperimentRun.Kind.TRANSFER)
    MetricsRecordFactory(run=run, patient="adult#003", controller="tsode-transfer")
    return run
