import math

import numpy as np
import pytest

from glucose_control.diffkit import Tensor, check_gradients
from glucose_control.forecaster import (
    N_FEATURES,
    FeatureScaler,
    FeatureWindow,
    ForecastDist,
    ForecasterModel,
    feature_row,
    nll_loss,
    nll_tensor,
)
from glucose_control.utils.exceptions import ConfigurationFault, NumericalFault


@pytest.fixture
def scaler() -> FeatureScaler:
    return FeatureScaler(
        mean=np.array([140.0, 1.0, 10.0, 0.0, 0.0, 1.0, 3.0]),
        sd=np.array([40.0, 1.0, 15.0, 0.7, 0.7, 2.0, 4.0]),
        dose_mean=0.3,
        dose_sd=0.6,
    )


@pytest.fixture
def model(scaler: FeatureScaler) -> ForecasterModel:
    return ForecasterModel(scaler, seed=3)


@pytest.fixture
def window() -> FeatureWindow:
    return FeatureWindow(np.random.default_rng(11).normal(size=(10, N_FEATURES)))


class TestEncode:

    def test_deterministic(self, model: ForecasterModel, window: FeatureWindow):
        np.testing.assert_array_equal(model.encode(window, 1.0), model.encode(window, 1.0))

    def test_latent_has_dose_channel(self, model: ForecasterModel, window: FeatureWindow):
        z0 = model.encode(window, 0.9)
        assert z0.shape == (17,)
        assert z0[16] == pytest.approx((0.9 - 0.3) / 0.6)

    def test_dose_only_changes_last_channel(self, model: ForecasterModel, window: FeatureWindow):
        low, high = model.encode(window, 0.0), model.encode(window, 3.0)
        np.testing.assert_array_equal(low[:16], high[:16])
        assert low[16] != high[16]

    def test_unstandardized_window_is_rejected(self, model: ForecasterModel):
        raw = FeatureWindow(np.full((10, N_FEATURES), 180.0))
        with pytest.raises(ConfigurationFault, match="outside"):
            model.encode(raw, 1.0)

    def test_excursion_beyond_a_narrow_training_range(self):
        training = [feature_row(bg, 0.5, 0.0, 3.0 * i) for i, bg in enumerate(np.linspace(40.0, 160.0, 400))]
        scaler = FeatureScaler.fit(np.array(training), np.zeros(400))
        narrow = ForecasterModel(scaler, seed=0)
        meal = [feature_row(bg, 2.0, 40.0, 720.0 + 3.0 * i) for i, bg in enumerate(np.linspace(250.0, 390.0, 10))]

        dist = narrow.predict(FeatureWindow.from_rows(meal, scaler), 1.0)

        assert np.all(np.isfinite(dist.mu))
        assert np.all(dist.var >= 1.0 - 1e-9)

    def test_impossible_glucose_is_rejected(self, scaler: FeatureScaler, model: ForecasterModel):
        rows = [feature_row(700.0, 0.0, 0.0, 3.0 * i) for i in range(10)]
        with pytest.raises(ConfigurationFault, match="outside"):
            model.predict(FeatureWindow.from_rows(rows, scaler), 0.0)

    def test_wrong_window_length(self, model: ForecasterModel):
        with pytest.raises(ConfigurationFault):
            model.predict(FeatureWindow(np.zeros((4, N_FEATURES))), 1.0)


class TestPredict:

    def test_zeroed_decoder_returns_training_mean(self, model: ForecasterModel, window: FeatureWindow):
        model.decoder.zero_()
        dist = model.predict(window, 0.0)
        np.testing.assert_allclose(dist.mu, np.full(10, 140.0))
        assert dist.horizon == 10

    def test_direct_insulin_pathway_lowers_every_step(self, model: ForecasterModel, window: FeatureWindow):
        model.decoder.zero_()
        none, some, most = model.predict_many(window, [0.0, 1.0, 3.0])
        assert np.all(most.mu < some.mu)
        assert np.all(some.mu < none.mu)
        assert np.all(np.diff(none.mu - most.mu) > 0)

    def test_dose_response_matches_predictions(self, model: ForecasterModel, window: FeatureWindow):
        gap = model.dose_response(window.values, 0.0, 3.0).values
        low, high = model.predict_many(window, [0.0, 3.0])
        assert gap.shape == (1,)
        assert gap[0] * model.scaler.bg_sd == pytest.approx(np.mean(high.mu - low.mu), rel=1e-9)

    def test_variance_floor(self, model: ForecasterModel, window: FeatureWindow):
        model.decoder.weight.values[:] = 0.0
        model.decoder.bias.values[:] = [0.0, -50.0]
        dist = model.predict(window, 0.0)
        np.testing.assert_allclose(dist.var, np.ones(10))
        assert np.all(model.predict(FeatureWindow(-window.values), 2.0).var >= 1.0)

    def test_continuous_in_dose(self, model: ForecasterModel, window: FeatureWindow):
        near = model.predict_many(window, [1.0, 1.0 + 1e-4])
        assert np.max(np.abs(near[0].mu - near[1].mu)) < 0.1

    def test_predict_many_matches_predict(self, model: ForecasterModel, window: FeatureWindow):
        doses = [0.0, 0.8, 3.0]
        for dose, dist in zip(doses, model.predict_many(window, doses)):
            single = model.predict(window, dose)
            np.testing.assert_allclose(dist.mu, single.mu, rtol=1e-12)
            np.testing.assert_allclose(dist.var, single.var, rtol=1e-12)
            assert dist.dose == dose

    def test_checkpoint_round_trip(self, model: ForecasterModel, window: FeatureWindow, tmp_path):
        path = tmp_path / "forecaster.npz"
        model.save(path)
        restored = ForecasterModel.load(path)
        np.testing.assert_array_equal(restored.predict(window, 1.4).mu, model.predict(window, 1.4).mu)
        np.testing.assert_array_equal(restored.scaler.sd, model.scaler.sd)
        assert restored.scaler.dose_sd == model.scaler.dose_sd


class TestNll:

    @pytest.mark.parametrize(
        "residual, var, expected",
        [
            (0.0, 1.0, 0.0),
            (1.0, 1.0, 0.5),
            (0.0, math.e, 0.5),
        ],
    )
    def test_arithmetic(self, residual: float, var: float, expected: float):
        mu = np.array([0.5, -1.0, 2.0])
        dist = ForecastDist(mu=mu, var=np.full(3, var), dose=0.0)
        assert nll_loss(dist, mu + residual) == pytest.approx(expected)

    def test_in_standardized_units(self, scaler: FeatureScaler):
        dist = ForecastDist(mu=np.full(2, 120.0), var=np.full(2, 40.0**2), dose=0.0)
        assert nll_loss(dist, np.full(2, 160.0), scaler) == pytest.approx(0.5)

    def test_shape_mismatch(self):
        dist = ForecastDist(mu=np.zeros(3), var=np.ones(3), dose=0.0)
        with pytest.raises(ConfigurationFault):
            nll_loss(dist, np.zeros(4))

    def test_non_positive_variance(self):
        dist = ForecastDist(mu=np.zeros(2), var=np.array([1.0, 0.0]), dose=0.0)
        with pytest.raises(NumericalFault):
            nll_loss(dist, np.zeros(2))

    def test_tensor_version_matches(self):
        rng = np.random.default_rng(0)
        mu, var, y = rng.normal(size=3), rng.uniform(0.5, 2.0, size=3), rng.normal(size=3)
        expected = nll_loss(ForecastDist(mu=mu, var=var, dose=0.0), y)
        loss = nll_tensor([Tensor(mu[[k]]) for k in range(3)], [Tensor(var[[k]]) for k in range(3)], y[None, :])
        assert float(loss.values) == pytest.approx(expected)

    def test_gradients_match_finite_differences(self, scaler: FeatureScaler):
        model = ForecasterModel(scaler, seed=5, hidden_dim=4, latent_dim=3, dynamics_dim=5, window_length=3, horizon=4)
        rng = np.random.default_rng(6)
        windows = rng.normal(size=(1, 3, N_FEATURES))
        doses = np.array([1.0])
        targets = rng.normal(size=(1, 4))

        def loss_fn():
            means, variances = model.forward(windows, doses)
            return nll_tensor(means, variances, targets)

        assert check_gradients(loss_fn, list(model.parameters().values())) < 1e-3
