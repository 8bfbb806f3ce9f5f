from pathlib import Path

import pytest

from glucose_control.utils.exceptions import ConfigurationFault
from glucose_control.vpatient import PatientParams, dump_params, load_cohort, load_params, make_cohort


def test_endogenous_production_balances_basal():
    params = PatientParams()
    expected = params.glucose_clearance_rate * params.initial_bg + params.insulin_sensitivity * params.basal_rate / 60
    assert params.endogenous_production == pytest.approx(expected)


@pytest.mark.parametrize("field_name", ("insulin_sensitivity", "glucose_clearance_rate", "icr", "basal_rate"))
@pytest.mark.parametrize("value", (0.0, -1.0, float("nan")))
def test_rejects_non_positive_parameters(field_name: str, value: float):
    with pytest.raises(ConfigurationFault):
        PatientParams(**{field_name: value})


def test_file_round_trip(tmp_path: Path):
    params = make_cohort()["adult#003"]
    path = tmp_path / "adult#003.env"
    dump_params(params, path)
    assert load_params(path) == params


def test_unknown_key_is_rejected(tmp_path: Path):
    path = tmp_path / "broken.env"
    dump_params(PatientParams(), path)
    path.write_text(path.read_text() + "body_weight=70\n")
    with pytest.raises(ConfigurationFault, match="body_weight"):
        load_params(path)


def test_missing_file():
    with pytest.raises(ConfigurationFault):
        load_params(Path("/nonexistent/adult.env"))


class TestCohort:

    def test_size_and_ids(self):
        cohort = make_cohort()
        assert list(cohort) == [f"adult#{index:03d}" for index in range(1, 11)]

    def test_seeded(self):
        assert make_cohort(seed=3) == make_cohort(seed=3)
        assert make_cohort(seed=3) != make_cohort(seed=4)

    def test_perturbation_is_bounded(self):
        base = PatientParams()
        for params in make_cohort().values():
            ratio = params.insulin_sensitivity / base.insulin_sensitivity
            assert 0.75 <= ratio <= 1.25

    def test_file_overrides_generator(self, tmp_path: Path):
        custom = PatientParams(initial_bg=150.0)
        dump_params(custom, tmp_path / "adult#001.env")
        cohort = load_cohort(["adult#001", "adult#002"], cohort_dir=tmp_path)
        assert cohort["adult#001"] == custom
        assert cohort["adult#002"] == make_cohort()["adult#002"]

    def test_unknown_patient(self):
        with pytest.raises(ConfigurationFault):
            load_cohort(["child#001"])
