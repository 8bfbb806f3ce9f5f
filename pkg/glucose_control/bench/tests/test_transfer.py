import json

import numpy as np
import pandas as pd
import pytest

from glucose_control.bench import transfer
from glucose_control.bench.config import load_experiment_config
from glucose_control.bench.pipeline import check_provenance
from glucose_control.bench.transfer import TRANSFER_CONTROLLER, transfer_roles, transfer_scenario
from glucose_control.forecaster import HORIZON, N_FEATURES, WINDOW_LENGTH, TrainRecord
from glucose_control.utils.exceptions import ConfigurationFault, NumericalFault

COHORT = ["adult#001", "adult#002", "adult#003"]


@pytest.fixture
def transfer_config():
    def _config(**overrides):
        options = dict(
            patients=COHORT, controllers=["tsode"], seeds=[0], days_warmup=1.0, days_eval=0.25, forecaster_epochs=1
        )
        options.update(overrides)
        return load_experiment_config(**options)

    return _config


def test_default_roles(transfer_config):
    assert transfer_roles(transfer_config()) == (("adult#001", "adult#002"), "adult#003")


def test_explicit_roles(transfer_config):
    cfg = transfer_config(transfer_sources=["adult#003", "adult#002"], transfer_target="adult#001")

    assert transfer_roles(cfg) == (("adult#003", "adult#002"), "adult#001")


def test_default_roles_need_three_patients(transfer_config):
    with pytest.raises(ConfigurationFault, match="at least three patients"):
        transfer_roles(transfer_config(patients=COHORT[:2]))


def test_provenance_check_rejects_target_records():
    window = np.full((WINDOW_LENGTH, N_FEATURES), 1.0)
    records = [
        TrainRecord(rows=window, dose=0.0, target=np.full(HORIZON, 150.0), source="adult#001"),
        TrainRecord(rows=window, dose=0.0, target=np.full(HORIZON, 150.0), source="adult#003"),
    ]

    check_provenance(records[:1], ["adult#001", "adult#002"])
    with pytest.raises(ConfigurationFault, match="adult#003"):
        check_provenance(records, ["adult#001", "adult#002"])


def test_transfer_scenario(transfer_config):
    cfg = transfer_config()

    outcome = transfer_scenario(cfg)

    out = cfg.output_path / "transfer"
    assert outcome.sources == ("adult#001", "adult#002")
    assert outcome.target == "adult#003"
    [seed] = outcome.seeds
    assert seed.result.row.status == "ok", seed.result.row.error
    assert seed.result.row.controller == TRANSFER_CONTROLLER
    assert seed.result.row.patient == "adult#003"

    assert seed.layer.sources == {"adult#001", "adult#002"}
    np.testing.assert_array_equal(seed.merged_table.n, sum(t.n for t in seed.source_tables))
    merged = pd.read_csv(out / "merged_table_seed0.csv")
    assert merged["n"].sum() == sum(int(t.n.sum()) for t in seed.source_tables)

    sidecar = json.loads((out / "traces" / f"adult-003_{TRANSFER_CONTROLLER}_seed0_eval.json").read_text())
    assert sidecar["sources"] == ["adult#001", "adult#002"]
    assert sidecar["phase"] == "eval"
    assert len(pd.read_csv(out / "metrics.csv")) == 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["kind"] == "transfer"
    assert manifest["transfer"] == {"sources": ["adult#001", "adult#002"], "target": "adult#003"}


def test_failed_seed_is_recorded_and_self_transfer_warns(transfer_config, caplog, monkeypatch):
    def _transfer_seed(cfg, sources, target, cohort, seed):
        raise NumericalFault("Forecaster loss is not finite", epoch=1)

    monkeypatch.setattr(transfer, "_transfer_seed", _transfer_seed)
    cfg = transfer_config(transfer_sources=["adult#001"], transfer_target="adult#001", seeds=[0, 1])

    outcome = transfer_scenario(cfg)

    assert "self-transfer" in caplog.text
    assert [row.status for row in outcome.rows] == ["failed", "failed"]
    frame = pd.read_csv(cfg.output_path / "transfer" / "metrics.csv")
    assert frame["error"].str.startswith("Forecaster loss is not finite").all()
