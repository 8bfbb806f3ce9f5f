import numpy as np
import pytest

from glucose_control.forecaster import OracleForecaster
from glucose_control.utils.exceptions import UsageFault
from glucose_control.vpatient import PatientParams, equilibrium_from, simulate_open_loop


def test_requires_true_state(adult_params: PatientParams):
    with pytest.raises(UsageFault):
        OracleForecaster(adult_params).predict(None, 1.0)


def test_matches_noise_free_rollout(adult_params: PatientParams):
    oracle = OracleForecaster(adult_params, meals=())
    state = equilibrium_from(adult_params)
    oracle.observe_truth(state)
    dist = oracle.predict(None, 2.0)
    expected = [s.plasma_glucose for s in simulate_open_loop(state, adult_params, 10, boluses={0: 2.0})]
    np.testing.assert_allclose(dist.mu, expected)
    np.testing.assert_array_equal(dist.var, np.ones(10))


def test_more_insulin_lowers_forecast(adult_params: PatientParams):
    oracle = OracleForecaster(adult_params)
    oracle.observe_truth(equilibrium_from(adult_params))
    low, high = oracle.predict_many(None, [0.0, 3.0])
    assert high.mu.mean() < low.mu.mean()
    assert np.all(high.mu <= low.mu)
