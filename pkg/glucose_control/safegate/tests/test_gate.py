import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glucose_control.forecaster import ForecastDist
from glucose_control.safegate import (
    ConformalCalibration,
    CorrectionFactors,
    Decision,
    SafetyConfig,
    check_safety,
    gate,
    largest_safe_dose,
    slope,
    weighted_average,
)
from glucose_control.tspolicy import DEFAULT_GRID
from glucose_control.utils.exceptions import ConfigurationFault

CFG = SafetyConfig()
FACTORS = CorrectionFactors(isf=45.0, csf=2.88)


def calibration(q: float) -> ConformalCalibration:
    return ConformalCalibration(residuals=np.array([q]), q_alpha=q, n_calibration=20, alpha=0.1)


def flat(level: float, dose: float = 0.0) -> ForecastDist:
    return ForecastDist(mu=np.full(10, level), var=np.ones(10), dose=dose)


def falling(bg_now: float, per_unit: float):
    """Forecast function whose trajectory drops ``per_unit`` mg/dL per step for every U."""
    def predict(dose: float) -> ForecastDist:
        return ForecastDist(mu=bg_now - per_unit * dose * np.arange(1, 11), var=np.ones(10), dose=dose)
    return predict


def predicate_forecast(safe):
    """Map an arbitrary dose predicate onto forecasts that pass/fail the default check with q=0."""
    return lambda dose: flat(150.0 if safe(dose) else 50.0, dose)


class TestSummaries:

    def test_constant_trajectory(self):
        assert weighted_average([100.0] * 3, [0.2, 0.3, 0.5]) == pytest.approx(100.0)

    def test_hand_arithmetic(self):
        assert weighted_average([120.0, 100.0, 80.0], [0.5065, 0.3072, 0.1863]) == pytest.approx(106.40, abs=0.01)

    def test_degenerate_weights(self):
        assert weighted_average([130.0, 90.0, 70.0], [1.0, 0.0, 0.0]) == 130.0

    def test_length_mismatch(self):
        with pytest.raises(ConfigurationFault):
            weighted_average([1.0, 2.0], [1.0])

    @pytest.mark.parametrize("last, bg_now, expected", [(100.0, 130.0, -1.0), (130.0, 130.0, 0.0), (160.0, 130.0, 1.0)])
    def test_slope(self, last: float, bg_now: float, expected: float):
        mu = np.linspace(bg_now, last, 10)
        assert slope(mu, bg_now, 10, 3.0) == pytest.approx(expected)


class TestCheckSafety:

    def test_flat_above_floor_passes(self):
        passes, w_lcb, s_lcb = check_safety(flat(CFG.floor_bg + 10), CFG.floor_bg + 10, calibration(0.0), CFG)
        assert passes
        assert w_lcb == pytest.approx(CFG.floor_bg + 10)
        assert s_lcb == pytest.approx(0.0)

    def test_quantile_pushes_below_floor(self):
        passes, w_lcb, _ = check_safety(flat(CFG.floor_bg + 10), CFG.floor_bg + 10, calibration(20.0), CFG)
        assert not passes
        assert w_lcb == pytest.approx(CFG.floor_bg - 10)

    def test_steep_descent_fails(self):
        bg_now, q = 250.0, 5.0
        last = bg_now - (CFG.gamma * 10 * CFG.dt + q + 1)
        dist = ForecastDist(mu=np.linspace(bg_now, last, 10), var=np.ones(10), dose=1.0)
        passes, w_lcb, s_lcb = check_safety(dist, bg_now, calibration(q), CFG)
        assert w_lcb >= CFG.floor_bg
        assert s_lcb < -CFG.gamma
        assert not passes

    def test_per_step_offsets(self):
        cal = ConformalCalibration(
            residuals=np.zeros((10, 1)), q_alpha=np.linspace(0.0, 40.0, 10), n_calibration=20, alpha=0.1
        )
        _, w_lcb, s_lcb = check_safety(flat(150.0), 150.0, cal, CFG)
        assert s_lcb == pytest.approx(-40.0 / 30.0)
        assert w_lcb < 150.0


class TestLargestSafeDose:

    def test_threshold_oracle(self):
        predict = predicate_forecast(lambda dose: dose <= 1.37)
        assert largest_safe_dose(predict, 3.0, 150.0, calibration(0.0), CFG) == pytest.approx(1.2)

    def test_nothing_safe(self):
        predict = predicate_forecast(lambda dose: False)
        assert largest_safe_dose(predict, 3.0, 150.0, calibration(0.0), CFG) == 0.0

    def test_non_monotone_predicate_falls_back_to_scan(self):
        def safe(dose: float) -> bool:
            off_grid = abs(dose - round(dose / 0.2) * 0.2) > 1e-6
            return dose == 0.0 or abs(dose - 0.6) < 1e-6 or (dose <= 1.5 and off_grid)

        predict = predicate_forecast(safe)
        assert largest_safe_dose(predict, 3.0, 150.0, calibration(0.0), CFG) == pytest.approx(0.6)

    def test_unsafe_zero_rejects_without_scanning(self):
        calls = []

        def safe(dose: float) -> bool:
            calls.append(dose)
            return abs(dose - 0.4) < 1e-6

        assert largest_safe_dose(predicate_forecast(safe), 2.0, 150.0, calibration(0.0), CFG) == 0.0
        assert calls == [0.0]

    def test_with_forecast_physics(self):
        predict = falling(160.0, 4.0)
        dose = largest_safe_dose(predict, 3.0, 160.0, calibration(10.0), CFG)
        assert dose in DEFAULT_GRID.doses
        assert check_safety(predict(dose), 160.0, calibration(10.0), CFG)[0]
        assert not check_safety(predict(dose + 0.2), 160.0, calibration(10.0), CFG)[0]

    def test_fuzzed_predicates(self):
        rng = np.random.default_rng(2024)
        cal = calibration(0.0)
        for _ in range(10_000):
            safe_set = {dose for dose in DEFAULT_GRID.doses if rng.random() < 0.3}
            threshold = rng.uniform(0.0, 3.0)
            monotone = rng.random() < 0.5

            def safe(dose: float) -> bool:
                if monotone:
                    return dose <= threshold
                return any(abs(dose - s) < 1e-9 for s in safe_set)

            proposed = float(rng.choice(DEFAULT_GRID.doses[1:]))
            result = largest_safe_dose(predicate_forecast(safe), proposed, 150.0, cal, CFG)
            assert 0.0 <= result <= proposed
            grid_safe = [d for d in DEFAULT_GRID.doses if d <= proposed and safe(d)]
            if not safe(0.0):
                assert result == 0.0
            elif any(d > 0 for d in grid_safe):
                assert safe(result)
            else:
                assert result == 0.0 or safe(result)


class TestGate:

    def test_zero_proposal_is_accepted(self):
        verdict = gate(0.0, 60.0, -3.0, 0.0, 700.0, None, None, CFG)
        assert (verdict.decision, verdict.final_dose) == (Decision.ACCEPT, 0.0)

    def test_high_and_rising_bypasses_forecast(self):
        def explode(dose):
            raise AssertionError("forecast consulted")

        verdict = gate(2.0, 260.0, 1.0, 0.0, 700.0, explode, calibration(0.0), CFG)
        assert (verdict.decision, verdict.final_dose) == (Decision.BYPASSED, 2.0)
        assert math.isnan(verdict.w_lcb)

    def test_low_glucose_is_blocked(self):
        verdict = gate(1.0, 85.0, 0.0, 0.0, 700.0, lambda d: flat(150.0, d), calibration(0.0), CFG)
        assert (verdict.decision, verdict.final_dose) == (Decision.GUARDRAIL_BLOCKED, 0.0)

    def test_falling_below_120_is_blocked(self):
        verdict = gate(1.0, 110.0, -1.5, 0.0, 700.0, lambda d: flat(150.0, d), calibration(0.0), CFG)
        assert verdict.decision is Decision.GUARDRAIL_BLOCKED

    def test_accept(self):
        verdict = gate(1.0, 150.0, 0.0, 0.0, 700.0, lambda d: flat(150.0, d), calibration(0.0), CFG)
        assert (verdict.decision, verdict.final_dose) == (Decision.ACCEPT, 1.0)
        assert verdict.w_lcb == pytest.approx(150.0)
        assert verdict.q_alpha == 0.0

    def test_scaled(self):
        verdict = gate(3.0, 160.0, 0.0, 0.0, 700.0, falling(160.0, 4.0), calibration(10.0), CFG)
        assert verdict.decision is Decision.SCALED
        assert 0.0 < verdict.final_dose < 3.0

    def test_reject(self):
        verdict = gate(1.0, 95.0, 0.0, 0.0, 700.0, lambda d: flat(80.0, d), calibration(0.0), CFG)
        assert (verdict.decision, verdict.final_dose) == (Decision.REJECT, 0.0)

    def test_iob_cap(self):
        verdict = gate(2.0, 200.0, 0.0, 4.1, 700.0, None, None, CFG)
        assert verdict.decision is Decision.GUARDRAIL_CAPPED
        assert verdict.final_dose == pytest.approx(0.8)

    def test_night_cap(self):
        verdict = gate(2.0, 200.0, 0.0, 0.0, 1440.0 * 3 + 120.0, None, None, CFG)
        assert verdict.decision is Decision.GUARDRAIL_CAPPED
        assert verdict.final_dose == pytest.approx(0.4)

    def test_bypass_never_disables_guardrails(self):
        cfg = SafetyConfig(bypass_bg=60.0)
        verdict = gate(2.0, 80.0, 2.0, 0.0, 700.0, None, None, cfg)
        assert (verdict.decision, verdict.final_dose) == (Decision.GUARDRAIL_BLOCKED, 0.0)

    def test_negative_proposal(self):
        with pytest.raises(ConfigurationFault):
            gate(-0.2, 150.0, 0.0, 0.0, 700.0, None, None, CFG)

    def test_stacked_insulin_hits_the_eventual_floor(self):
        verdict = gate(2.0, 130.0, 0.0, 3.0, 700.0, lambda d: flat(150.0, d), calibration(0.0), CFG, factors=FACTORS)
        assert (verdict.decision, verdict.final_dose) == (Decision.GUARDRAIL_CAPPED, 0.0)

    def test_eventual_floor_rounds_down_to_the_grid(self):
        verdict = gate(2.0, 200.0, 0.0, 0.5, 700.0, None, None, CFG, factors=FACTORS)
        assert verdict.decision is Decision.GUARDRAIL_CAPPED
        assert verdict.final_dose == pytest.approx(1.6)

    def test_announced_carbs_make_room_for_the_meal_bolus(self):
        bare = gate(3.0, 130.0, 0.0, 0.0, 700.0, None, None, CFG, factors=FACTORS)
        with_meal = gate(3.0, 130.0, 0.0, 0.0, 700.0, None, None, CFG, carbs_now=50.0, factors=FACTORS)
        assert bare.final_dose == pytest.approx(0.6)
        assert (with_meal.decision, with_meal.final_dose) == (Decision.ACCEPT, 3.0)

    def test_without_factors_the_eventual_floor_is_off(self):
        verdict = gate(2.0, 130.0, 0.0, 3.0, 700.0, None, None, CFG)
        assert (verdict.decision, verdict.final_dose) == (Decision.ACCEPT, 2.0)


@settings(max_examples=300, deadline=None)
@given(
    proposed=st.sampled_from(DEFAULT_GRID.doses),
    bg_now=st.floats(min_value=40.0, max_value=400.0),
    trend=st.floats(min_value=-5.0, max_value=5.0),
    iob=st.floats(min_value=0.0, max_value=8.0),
    time_of_day=st.floats(min_value=0.0, max_value=1439.0),
    per_unit=st.floats(min_value=0.0, max_value=10.0),
    q=st.floats(min_value=0.0, max_value=40.0),
)
def test_gate_never_increases_the_dose(proposed, bg_now, trend, iob, time_of_day, per_unit, q):
    verdict = gate(proposed, bg_now, trend, iob, time_of_day, falling(bg_now, per_unit), calibration(q), CFG)
    assert 0.0 <= verdict.final_dose <= proposed
    assert verdict.final_dose in DEFAULT_GRID.doses
    if verdict.decision is Decision.REJECT:
        assert verdict.final_dose == 0.0
    if bg_now < CFG.guard_bg_min:
        assert verdict.final_dose == 0.0


@settings(max_examples=300, deadline=None)
@given(
    proposed=st.sampled_from(DEFAULT_GRID.doses),
    bg_now=st.floats(min_value=40.0, max_value=400.0),
    iob=st.floats(min_value=0.0, max_value=8.0),
    carbs=st.sampled_from([0.0, 15.0, 50.0, 70.0]),
    isf=st.floats(min_value=20.0, max_value=80.0),
)
def test_delivered_dose_respects_the_eventual_floor(proposed, bg_now, iob, carbs, isf):
    factors = CorrectionFactors(isf=isf, csf=2.88)
    verdict = gate(proposed, bg_now, 0.0, iob, 700.0, None, None, CFG, carbs_now=carbs, factors=factors)
    if verdict.final_dose > 0:
        eventual = bg_now + factors.csf * carbs - isf * (iob + verdict.final_dose)
        assert eventual >= CFG.eventual_floor - 1e-6
