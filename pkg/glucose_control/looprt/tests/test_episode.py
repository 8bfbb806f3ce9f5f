from dataclasses import replace

import numpy as np
import pytest

from glucose_control.forecaster import OracleForecaster
from glucose_control.looprt import (
    REFRACTORY_PERIOD,
    ControllerState,
    StepRecord,
    TsodeController,
    iob_of,
    run_episode,
    trace_frame,
)
from glucose_control.looprt import episode as episode_module
from glucose_control.safegate import ConformalCalibration
from glucose_control.tspolicy import DEFAULT_GRID, Mode, PolicyTable
from glucose_control.utils.exceptions import ConfigurationFault, EpisodeAborted, NumericalFault
from glucose_control.utils.glycemia import time_below
from glucose_control.vpatient import PatientParams


def tsode(params: PatientParams, **kwargs) -> TsodeController:
    return TsodeController(table=PolicyTable(91, 16), icr=params.icr, **kwargs)


@pytest.fixture(scope="module")
def warmup_day():
    params = PatientParams()
    controller = tsode(params)
    return params, controller, run_episode(params, controller, days=1, seed=11)


class TestWarmupDay:

    def test_step_count(self, warmup_day):
        _, _, result = warmup_day
        assert result.completed
        assert [r.step for r in result.records] == list(range(480))
        assert result.final_state.clock == pytest.approx(1440.0)

    def test_meal_step_carries_prebolus(self, warmup_day):
        params, _, result = warmup_day
        breakfast = result.records[160]
        assert breakfast.clock == 480.0
        assert breakfast.prebolus == pytest.approx(min(50.0 / params.icr, 3.0))
        assert breakfast.proposed_dose >= DEFAULT_GRID.nearest(breakfast.prebolus)

    def test_deliveries_are_grid_values_below_the_gate(self, warmup_day):
        _, _, result = warmup_day
        for record in result.records:
            assert record.delivered_dose in DEFAULT_GRID.doses
            assert record.delivered_dose <= record.final_dose or record.delivered_dose == 0.0
            assert record.delivered_dose <= record.proposed_dose

    def test_refractory_spacing(self, warmup_day):
        _, _, result = warmup_day
        times = [r.clock for r in result.records if r.delivered_dose > 0]
        assert times
        assert np.all(np.diff(times) >= REFRACTORY_PERIOD)

    def test_iob_matches_logged_boluses(self, warmup_day):
        _, _, result = warmup_day
        history = []
        for record in result.records:
            assert record.iob == pytest.approx(iob_of(history, record.clock), abs=1e-9)
            if record.delivered_dose > 0:
                history.append((record.clock, record.delivered_dose))

    def test_rewards_are_credited(self, warmup_day):
        _, controller, result = warmup_day
        rewarded = [r for r in result.records if np.isfinite(r.reward)]
        assert rewarded
        assert controller.table.n.sum() == len(rewarded)
        assert all(r.step <= 469 for r in rewarded)

    def test_no_truth_in_features(self, warmup_day):
        _, _, result = warmup_day
        window = np.array(result.runtime.rows)[:, 0]
        observed = [r.bg_observed for r in result.records[-10:]]
        np.testing.assert_array_equal(window, observed)
        assert any(r.bg_true != r.bg_observed for r in result.records[-10:])


def test_deterministic(adult_params: PatientParams):
    first = run_episode(adult_params, tsode(adult_params), days=0.25, seed=5)
    second = run_episode(adult_params, tsode(adult_params), days=0.25, seed=5)
    assert trace_frame(first.records).equals(trace_frame(second.records))


def test_eval_continues_without_learning(adult_params: PatientParams):
    controller = tsode(adult_params)
    warmup = run_episode(adult_params, controller, days=0.5, seed=2)
    visits = controller.table.n.copy()
    evaluation = run_episode(
        adult_params,
        controller,
        days=0.5,
        seed=2,
        mode=Mode.GREEDY,
        initial_state=warmup.final_state,
        runtime=warmup.runtime,
    )
    assert evaluation.records[0].step == 240
    assert evaluation.records[0].clock == pytest.approx(720.0)
    np.testing.assert_array_equal(controller.table.n, visits)
    assert all(np.isnan(r.reward) for r in evaluation.records)


def test_oracle_gate_prevents_severe_hypoglycemia(adult_params: PatientParams):
    table = PolicyTable(91, 16)
    for state in range(7 * 7, 91):  # BG >= 180 mg/dL
        table.mean[state, 2] = 1.0
        table.n[state, 2] = 1
    oracle = OracleForecaster(adult_params)
    calibration = ConformalCalibration(residuals=np.zeros(1), q_alpha=0.0, n_calibration=20, alpha=0.1)
    controller = TsodeController(table=table, icr=adult_params.icr, forecaster=oracle, calibration=calibration)
    result = run_episode(adult_params, controller, days=14, seed=3, mode=Mode.GREEDY, truth_hook=oracle.observe_truth)
    assert result.completed
    assert min(r.bg_true for r in result.records) >= 54.0


def test_exploring_warmup_does_not_stack_insulin(adult_params: PatientParams):
    controller = TsodeController.for_patient(adult_params, PolicyTable(91, 16))
    result = run_episode(adult_params, controller, days=4, seed=0)
    bg = [r.bg_true for r in result.records]
    assert result.completed
    assert time_below(bg, 70.0) < 10.0
    assert time_below(bg, 54.0) < 1.0
    assert result.records[-1].bg_true > 70.0
    floor = controller.safety.eventual_floor
    for record in result.records:
        if record.delivered_dose > 0 and record.prebolus == 0:
            eventual = record.bg_observed - adult_params.insulin_sensitivity * (record.iob + record.delivered_dose)
            assert eventual >= floor - 1e-6


def test_simulator_fault_keeps_partial_trace(adult_params: PatientParams, monkeypatch):
    real_step = episode_module.step

    def failing_step(state, *args, **kwargs):
        if state.clock >= 30.0:
            raise NumericalFault("Patient state blew up", clock=state.clock)
        return real_step(state, *args, **kwargs)

    monkeypatch.setattr(episode_module, "step", failing_step)
    result = run_episode(adult_params, tsode(adult_params), days=1, seed=0)
    assert not result.completed
    assert len(result.records) == 11
    assert "clock=30.0" in result.fault


def test_controller_fault_aborts(adult_params: PatientParams):
    class Broken:
        name = "broken"
        learns = False

        def decide(self, ctrl: ControllerState, ctx) -> StepRecord:
            if ctx.step == 5:
                raise NumericalFault("Latent trajectory became non-finite", step=3)
            return StepRecord(step=ctx.step, clock=ctx.clock, bg_observed=ctx.bg_observed, iob=0.0, cob=0.0)

        def learn(self, state_id, action_index, reward):
            raise AssertionError("not a learner")

    with pytest.raises(EpisodeAborted) as excinfo:
        run_episode(adult_params, Broken(), days=1, seed=0)
    assert len(excinfo.value.records) == 5


def test_needs_positive_days(adult_params: PatientParams):
    with pytest.raises(ConfigurationFault):
        run_episode(adult_params, tsode(adult_params), days=0, seed=0)


def test_patient_variation_changes_trace(adult_params: PatientParams):
    sensitive = replace(adult_params, insulin_sensitivity=90.0)
    base = run_episode(adult_params, tsode(adult_params), days=0.25, seed=1)
    other = run_episode(sensitive, tsode(sensitive), days=0.25, seed=1)
    assert [r.bg_true for r in base.records] != [r.bg_true for r in other.records]
