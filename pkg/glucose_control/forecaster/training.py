"""Training pairs from closed-loop logs and the minibatch NLL fit."""
from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
import pandas as pd

from glucose_control.diffkit import Adam, Graph, Tensor
from glucose_control.diffkit import tensor as T
from glucose_control.utils.exceptions import ConfigurationFault, NumericalFault

from .features import FEATURE_NAMES, HORIZON, N_FEATURES, WINDOW_LENGTH, FeatureScaler, FeatureWindow, feature_row
from .model import ForecasterModel, nll_tensor

logger = logging.getLogger(__name__)

SPLIT_FRACTIONS = (0.7, 0.15, 0.15)
DOSE_RESPONSE_PAIR = (0.0, 3.0)  # U
DOSE_RESPONSE_MARGIN = 1.0  # mg/dL
MONOTONE_WEIGHT = 10.0


class TraceStep(Protocol):
    clock: float
    bg_observed: float
    iob: float
    cob: float
    delivered_dose: float


@dataclass(frozen=True)
class TrainRecord:
    rows: np.ndarray  # raw H x F features
    dose: float  # U delivered at the last window step
    target: np.ndarray  # next K observed BG values, mg/dL
    source: str = ""  # patient the record came from
    position: int = 0  # index of the first window step in its trace

    def __post_init__(self):
        if np.any(self.target < 20.0) or np.any(self.target > 600.0):
            raise ConfigurationFault(f"Record target outside [20, 600] mg/dL (source={self.source}).")

    def window(self, scaler: FeatureScaler) -> FeatureWindow:
        return FeatureWindow(scaler.standardize(self.rows))


@dataclass
class TrainingHistory:
    losses: list[float]  # full-set NLL before training, then after every epoch

    @property
    def initial(self) -> float:
        return self.losses[0]

    @property
    def final(self) -> float:
        return self.losses[-1]


def extract_records(
    trace: Sequence[TraceStep],
    window_length: int = WINDOW_LENGTH,
    horizon: int = HORIZON,
    source: str = "",
) -> list[TrainRecord]:
    """
    Stride-1 sliding windows over one contiguous trace.

    The record at position ``i`` uses steps ``i .. i+H-1`` as its window, the dose delivered at
    step ``i+H-1`` and the observed BG of steps ``i+H .. i+H+K-1`` as its target. A trace shorter
    than ``H + K`` yields no records.
    """
    count = len(trace) - window_length - horizon + 1
    if count <= 0:
        return []
    rows = np.array([feature_row(s.bg_observed, s.iob, s.cob, s.clock) for s in trace])
    bg = np.array([s.bg_observed for s in trace])
    doses = np.array([s.delivered_dose for s in trace])
    return [
        TrainRecord(
            rows=rows[i:i + window_length],
            dose=float(doses[i + window_length - 1]),
            target=bg[i + window_length:i + window_length + horizon],
            source=source,
            position=i,
        )
        for i in range(count)
    ]


def split_trace(trace: Sequence, fractions: Sequence[float] = SPLIT_FRACTIONS) -> list[Sequence]:
    """Contiguous chronological split; extracting records per part keeps windows from crossing a boundary."""
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigurationFault(f"Split fractions must be non-negative and sum to 1, got {tuple(fractions)}.")
    bounds = np.floor(np.cumsum([0.0, *fractions]) * len(trace) + 1e-9).astype(int)
    bounds[-1] = len(trace)
    return [trace[bounds[i]:bounds[i + 1]] for i in range(len(fractions))]


def fit_scaler(records: Sequence[TrainRecord]) -> FeatureScaler:
    if not records:
        raise ConfigurationFault("Cannot fit a feature scaler without training records.")
    rows = np.vstack([r.rows for r in records])
    return FeatureScaler.fit(rows, np.array([r.dose for r in records]))


def _arrays(model: ForecasterModel, records: Sequence[TrainRecord]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    windows = np.stack([model.scaler.standardize(r.rows) for r in records])
    doses = np.array([r.dose for r in records])
    targets = model.scaler.standardize_bg(np.stack([r.target for r in records]))
    return windows, doses, targets


def dose_response_penalty(model: ForecasterModel, windows: np.ndarray) -> Tensor:
    """
    Mean hinge on windows whose horizon-mean forecast does not drop by at least
    :data:`DOSE_RESPONSE_MARGIN` when the dose goes from 0 to 3 U.
    """
    low, high = DOSE_RESPONSE_PAIR
    gap = model.dose_response(windows, low, high)
    margin = Tensor(np.full(gap.shape, DOSE_RESPONSE_MARGIN / model.scaler.bg_sd))
    return T.mean(T.maximum(T.add(gap, margin), 0.0))


def dataset_loss(model: ForecasterModel, records: Sequence[TrainRecord]) -> float:
    """Mean standardized NLL over ``records`` without recording a graph."""
    windows, doses, targets = _arrays(model, records)
    means, variances = model.forward(windows, doses)
    return float(nll_tensor(means, variances, targets).values)


def train(
    model: ForecasterModel,
    records: Sequence[TrainRecord],
    epochs: int = 30,
    lr: float = 1e-3,
    batch_size: int = 64,
    seed: int = 0,
    monotone_weight: float = MONOTONE_WEIGHT,
) -> tuple[ForecasterModel, TrainingHistory]:
    """
    Fit ``model`` in place by Adam on the minibatch mean NLL plus ``monotone_weight`` times
    :func:`dose_response_penalty`. The recorded history is the NLL alone.

    :raise NumericalFault: with epoch/batch context when the loss or a gradient stops being finite.
    """
    if not records:
        raise ConfigurationFault("Training needs at least one record.")
    if epochs < 0 or batch_size < 1 or monotone_weight < 0:
        raise ConfigurationFault(
            f"Invalid training schedule: epochs={epochs}, batch_size={batch_size}, monotone_weight={monotone_weight}."
        )

    rng = np.random.default_rng(seed)
    params = model.parameters()
    optimizer = Adam(params, lr=lr)
    windows, doses, targets = _arrays(model, records)
    history = TrainingHistory(losses=[dataset_loss(model, records)])
    logger.info("Training forecaster on %d records, initial NLL %.4f", len(records), history.initial)

    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(records))
        for batch, start in enumerate(range(0, len(order), batch_size)):
            index = order[start:start + batch_size]
            try:
                with Graph() as graph:
                    means, variances = model.forward(windows[index], doses[index])
                    loss = nll_tensor(means, variances, targets[index])
                    if monotone_weight > 0:
                        penalty = dose_response_penalty(model, windows[index])
                        loss = T.add(loss, T.scale(penalty, monotone_weight))
                if not np.isfinite(loss.values):
                    raise NumericalFault("Training loss diverged")
                grads = graph.backward(loss)
            except NumericalFault as exc:
                raise NumericalFault(str(exc), epoch=epoch, batch=batch) from exc
            optimizer.step({name: grads.get(p, np.zeros_like(p.values)) for name, p in params.items()})
        history.losses.append(dataset_loss(model, records))
        if not np.isfinite(history.final):
            raise NumericalFault("Training loss diverged", epoch=epoch)
        logger.debug("Epoch %d/%d NLL %.4f", epoch, epochs, history.final)

    logger.info("Forecaster trained: NLL %.4f -> %.4f", history.initial, history.final)
    return model, history


def fit_forecaster(
    records: Sequence[TrainRecord],
    epochs: int = 30,
    lr: float = 1e-3,
    batch_size: int = 64,
    seed: int = 0,
) -> tuple[ForecasterModel, TrainingHistory]:
    """Fit the scaler on ``records``, build a fresh model from ``seed`` and train it."""
    model = ForecasterModel(fit_scaler(records), seed=seed)
    return train(model, records, epochs=epochs, lr=lr, batch_size=batch_size, seed=seed)


def evaluate_rmse(model: ForecasterModel, records: Sequence[TrainRecord], step: int | None = None) -> float:
    """RMSE of the forecast mean in mg/dL over all horizon steps, or at 1-based ``step`` only."""
    if not records:
        raise ConfigurationFault("Cannot evaluate on zero records.")
    windows, doses, _ = _arrays(model, records)
    means, _ = model.forward(windows, doses)
    mu = model.scaler.destandardize_bg(np.stack([m.values for m in means], axis=1))
    target = np.stack([r.target for r in records])
    if step is not None:
        mu, target = mu[:, step - 1], target[:, step - 1]
    return float(np.sqrt(np.mean((mu - target) ** 2)))


def residuals(model: ForecasterModel, records: Sequence[TrainRecord]) -> np.ndarray:
    """Absolute residuals ``|y_k - mu_k|`` in mg/dL, shape ``(n_records, K)``."""
    windows, doses, _ = _arrays(model, records)
    means, _ = model.forward(windows, doses)
    mu = model.scaler.destandardize_bg(np.stack([m.values for m in means], axis=1))
    return np.abs(np.stack([r.target for r in records]) - mu)


def _columns(window_length: int, horizon: int) -> list[str]:
    window = [f"{name}_{h}" for h in range(window_length) for name in FEATURE_NAMES]
    return ["source", "position", *window, "dose", *(f"target_{k + 1}" for k in range(horizon))]


def dump_records_csv(records: Sequence[TrainRecord], path: Path) -> None:
    """One row per record: provenance, the flattened raw window, the dose and the targets."""
    window_length = records[0].rows.shape[0] if records else WINDOW_LENGTH
    horizon = records[0].target.shape[0] if records else HORIZON
    frame = pd.DataFrame(
        [[r.source, r.position, *r.rows.ravel(), r.dose, *r.target] for r in records],
        columns=_columns(window_length, horizon),
    )
    frame.to_csv(path, index=False)


def load_records_csv(path: Path, window_length: int = WINDOW_LENGTH, horizon: int = HORIZON) -> list[TrainRecord]:
    frame = pd.read_csv(path, dtype={"source": str}, keep_default_na=False, float_precision="round_trip")
    window_cols = _columns(window_length, horizon)[2:2 + window_length * N_FEATURES]
    target_cols = [f"target_{k + 1}" for k in range(horizon)]
    return [
        TrainRecord(
            rows=row[window_cols].to_numpy(dtype=np.float64).reshape(window_length, N_FEATURES),
            dose=float(row["dose"]),
            target=row[target_cols].to_numpy(dtype=np.float64),
            source=row["source"],
            position=int(row["position"]),
        )
        for _, row in frame.iterrows()
    ]
