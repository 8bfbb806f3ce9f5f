from .features import FEATURE_NAMES, HORIZON, N_FEATURES, WINDOW_LENGTH, FeatureScaler, FeatureWindow, feature_row
from .model import ForecastDist, ForecasterModel, nll_loss, nll_tensor
from .oracle import OracleForecaster
from .training import (
    TrainingHistory,
    TrainRecord,
    dataset_loss,
    dump_records_csv,
    evaluate_rmse,
    extract_records,
    fit_forecaster,
    fit_scaler,
    load_records_csv,
    residuals,
    split_trace,
    train,
)

__all__ = [
    "FEATURE_NAMES",
    "HORIZON",
    "N_FEATURES",
    "WINDOW_LENGTH",
    "FeatureScaler",
    "FeatureWindow",
    "ForecastDist",
    "ForecasterModel",
    "OracleForecaster",
    "TrainRecord",
    "TrainingHistory",
    "dataset_loss",
    "dump_records_csv",
    "evaluate_rmse",
    "extract_records",
    "feature_row",
    "fit_forecaster",
    "fit_scaler",
    "load_records_csv",
    "nll_loss",
    "nll_tensor",
    "residuals",
    "split_trace",
    "train",
]
