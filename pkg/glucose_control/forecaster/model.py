"""
Latent ODE glucose forecaster.

A GRU encodes the standardized window, a linear projection yields a 16-d latent state to which
the standardized candidate dose is appended as a constant 17th channel. A tanh MLP drives the
latent flow (its output on the dose channel is masked to zero) and RK4 integrates it one step
per control interval. Each latent state decodes into a mean and a log-variance of glucose.

The candidate dose also lowers every decoded mean directly through a non-negative per-step
gain, so more insulin never raises that part of the forecast.
"""
from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from glucose_control.diffkit import Dense, GruCell, Mlp, Parameter, Tensor, forward_gru, rk4_integrate
from glucose_control.diffkit import assign, load_checkpoint, save_checkpoint
from glucose_control.diffkit import tensor as T
from glucose_control.utils.exceptions import ConfigurationFault, NumericalFault

from .features import HORIZON, N_FEATURES, WINDOW_LENGTH, FeatureScaler, FeatureWindow

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1.0  # mg/dL^2
RAW_BG_RANGE = (20.0, 600.0)  # mg/dL
INITIAL_INSULIN_EFFECT = 2.0  # mg/dL per U at the end of the horizon


@dataclass(frozen=True)
class ForecastDist:
    mu: np.ndarray  # mg/dL, shape (K,)
    var: np.ndarray  # mg/dL^2, shape (K,)
    dose: float  # U

    @property
    def horizon(self) -> int:
        return self.mu.shape[0]


def nll_loss(dist: ForecastDist, target: Sequence[float], scaler: FeatureScaler | None = None) -> float:
    """
    Heteroscedastic Gaussian NLL averaged over the horizon, in standardized units.

    Without a scaler the inputs are taken as already standardized.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != dist.mu.shape:
        raise ConfigurationFault(f"Target shape {target.shape} does not match forecast {dist.mu.shape}.")
    if np.any(dist.var <= 0):
        raise NumericalFault("Forecast variance must be strictly positive")
    sd = 1.0 if scaler is None else scaler.bg_sd
    residual = (target - dist.mu) / sd
    var = dist.var / sd**2
    return float(np.mean(0.5 * (np.log(var) + residual**2 / var)))


def nll_tensor(means: Sequence[Tensor], variances: Sequence[Tensor], targets: np.ndarray) -> Tensor:
    """Graph version of :func:`nll_loss` over a batch: ``targets`` is ``(B, K)`` standardized."""
    terms = []
    for k, (mean, var) in enumerate(zip(means, variances)):
        residual = T.sub(Tensor(targets[:, k]), mean)
        terms.append(T.add(T.log(var), T.div(T.square(residual), var)))
    summed = terms[0]
    for term in terms[1:]:
        summed = T.add(summed, term)
    return T.scale(T.mean(summed), 0.5 / len(terms))


class ForecasterModel:

    def __init__(
        self,
        scaler: FeatureScaler,
        seed: int = 0,
        hidden_dim: int = 32,
        latent_dim: int = 16,
        dynamics_dim: int = 64,
        window_length: int = WINDOW_LENGTH,
        horizon: int = HORIZON,
    ):
        rng = np.random.default_rng(seed)
        self.scaler = scaler
        self.hidden_dim = hidden_dim
        self.latent_dim = latent_dim
        self.dynamics_dim = dynamics_dim
        self.window_length = window_length
        self.horizon = horizon
        self.step_size = 1.0 / horizon

        self.gru = GruCell(N_FEATURES, hidden_dim, rng, name="gru")
        self.projection = Dense(hidden_dim, latent_dim, rng, name="projection")
        self.dynamics = Mlp([latent_dim + 1, dynamics_dim, latent_dim + 1], rng, name="dynamics", output_gain=0.1)
        self.decoder = Dense(latent_dim, 2, rng, name="decoder", gain=0.1)
        ramp = (np.arange(1, horizon + 1) / horizon) ** 2
        self.insulin_gain = Parameter(
            np.log(INITIAL_INSULIN_EFFECT * ramp / scaler.bg_sd).reshape(-1, 1), name="insulin_gain.log"
        )
        self._dose_mask = np.append(np.ones(latent_dim), 0.0)

    @property
    def variance_floor(self) -> float:
        """The 1 mg/dL^2 floor expressed in standardized units."""
        return VARIANCE_FLOOR / self.scaler.bg_sd**2

    def parameters(self) -> dict[str, Parameter]:
        params: dict[str, Parameter] = {}
        for module in (self.gru, self.projection, self.dynamics, self.decoder):
            params.update(module.parameters())
        params[self.insulin_gain.name] = self.insulin_gain
        return params

    # Building blocks ------------------------------------------------------------------

    def _check_windows(self, windows: np.ndarray) -> np.ndarray:
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim == 2:
            windows = windows[None]
        if windows.shape[1:] != (self.window_length, N_FEATURES):
            raise ConfigurationFault(
                f"Expected windows of shape (B, {self.window_length}, {N_FEATURES}), got {windows.shape}."
            )
        if not np.all(np.isfinite(windows)):
            raise ConfigurationFault("Feature window contains non-finite values.")
        low, high = RAW_BG_RANGE
        bg = self.scaler.destandardize_bg(windows[..., 0])
        if np.any(bg < low) or np.any(bg > high):
            raise ConfigurationFault(
                f"Feature window BG spans {bg.min():.0f}..{bg.max():.0f} mg/dL, outside [{low:.0f}, {high:.0f}]; "
                "is it standardized with this model's scaler?"
            )
        return windows

    def latent(self, windows: np.ndarray) -> Tensor:
        """Projected final GRU state, shape ``(B, latent_dim)``."""
        windows = self._check_windows(windows)
        batch = windows.shape[0]
        inputs = [Tensor(windows[:, index, :]) for index in range(self.window_length)]
        hidden = forward_gru(self.gru, inputs, Tensor(np.zeros((batch, self.hidden_dim))))
        return self.projection(hidden)

    def _flow(self, z: Tensor) -> Tensor:
        return T.mul_const(self.dynamics(z), self._dose_mask)

    def _insulin_effect(self, doses: np.ndarray) -> Tensor:
        """Direct glucose drop of each dose in standardized units, shape ``(B, K)``."""
        return T.linear(Tensor(np.asarray(doses, dtype=np.float64).reshape(-1, 1)), T.exp(self.insulin_gain))

    def _decode(self, z: Tensor, effect: Tensor) -> tuple[Tensor, Tensor]:
        out = self.decoder(T.take(z, slice(0, self.latent_dim)))
        mean = T.sub(T.take(out, 0), effect)
        var = T.maximum(T.exp(T.take(out, 1)), self.variance_floor)
        return mean, var

    def _trajectories(self, latent: Tensor, doses: np.ndarray) -> tuple[list[Tensor], list[Tensor]]:
        doses = np.asarray(doses, dtype=np.float64)
        z0 = T.concat([latent, Tensor(self.scaler.standardize_dose(doses).reshape(-1, 1))])
        effects = self._insulin_effect(doses)
        means, variances = [], []
        for k, z in enumerate(rk4_integrate(self._flow, z0, self.horizon, self.step_size)):
            mean, var = self._decode(z, T.take(effects, k))
            means.append(mean)
            variances.append(var)
        return means, variances

    def forward(self, windows: np.ndarray, doses: np.ndarray) -> tuple[list[Tensor], list[Tensor]]:
        """Standardized per-step means and variances, each a list of ``K`` tensors of shape ``(B,)``."""
        return self._trajectories(self.latent(windows), doses)

    def dose_response(self, windows: np.ndarray, low: float, high: float) -> Tensor:
        """Horizon-mean forecast at ``high`` U minus the one at ``low`` U, standardized, shape ``(B,)``."""
        latent = self.latent(windows)
        batch = latent.shape[0]
        low_means, _ = self._trajectories(latent, np.full(batch, low))
        high_means, _ = self._trajectories(latent, np.full(batch, high))
        gap = T.sub(high_means[0], low_means[0])
        for high_mean, low_mean in zip(high_means[1:], low_means[1:]):
            gap = T.add(gap, T.sub(high_mean, low_mean))
        return T.scale(gap, 1.0 / self.horizon)

    def encode_batch(self, windows: np.ndarray, doses: np.ndarray) -> Tensor:
        latent = self.latent(windows)
        dose_channel = Tensor(self.scaler.standardize_dose(doses).reshape(-1, 1))
        return T.concat([latent, dose_channel])

    # Public operations ----------------------------------------------------------------

    def encode(self, window: FeatureWindow, dose: float) -> np.ndarray:
        """Latent initial state ``z0``: 16 latent channels followed by the standardized dose."""
        return self.encode_batch(window.values, np.array([dose])).values[0]

    def predict(self, window: FeatureWindow, dose: float) -> ForecastDist:
        return self.predict_many(window, [dose])[0]

    def predict_many(self, window: FeatureWindow, doses: Sequence[float]) -> list[ForecastDist]:
        """Forecasts for several candidate doses sharing one encoding of ``window``."""
        return self._rollout(self.latent(window.values).values, np.asarray(doses, dtype=np.float64))

    def predictor(self, window: FeatureWindow) -> Callable[[float], ForecastDist]:
        """Single-dose forecast function that reuses one encoding of ``window``."""
        latent = self.latent(window.values).values
        return lambda dose: self._rollout(latent, np.array([dose], dtype=np.float64))[0]

    def _rollout(self, latent: np.ndarray, doses: np.ndarray) -> list[ForecastDist]:
        means, variances = self._trajectories(Tensor(np.repeat(latent, len(doses), axis=0)), doses)
        mu = self.scaler.destandardize_bg(np.stack([m.values for m in means], axis=1))
        var = np.stack([v.values for v in variances], axis=1) * self.scaler.bg_sd**2
        return [ForecastDist(mu=mu[i], var=var[i], dose=float(dose)) for i, dose in enumerate(doses)]

    # Persistence ----------------------------------------------------------------------

    def save(self, path: Path) -> None:
        extras = dict(self.scaler.to_arrays())
        extras["architecture"] = np.array(
            [self.hidden_dim, self.latent_dim, self.dynamics_dim, self.window_length, self.horizon]
        )
        save_checkpoint(path, self.parameters(), extras)

    @classmethod
    def load(cls, path: Path) -> ForecasterModel:
        params, extras = load_checkpoint(path)
        hidden_dim, latent_dim, dynamics_dim, window_length, horizon = (int(v) for v in extras["architecture"])
        model = cls(
            FeatureScaler.from_arrays(extras),
            hidden_dim=hidden_dim,
            latent_dim=latent_dim,
            dynamics_dim=dynamics_dim,
            window_length=window_length,
            horizon=horizon,
        )
        assign(model.parameters(), params)
        logger.info("Loaded forecaster checkpoint %s", path)
        return model
