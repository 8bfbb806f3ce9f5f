from drf_spectacular.utils import OpenApiExample
from rest_framework import status

RUN_NOT_FOUND_RESPONSE = OpenApiExample(
    "Run Not Found",
    value={"detail": "ExperimentRun with UUID '3fa85f64-5717-4562-b3fc-2c963f66afa6' does not exist."},
    response_only=True,
    status_codes=[status.HTTP_404_NOT_FOUND],
)

RUN_RESPONSE = OpenApiExample(
    "Experiment Run",
    value={
        "uuid": "3fa85f64-5717-4562-b3fc-2c963f66afa6",
        "kind": "run",
        "config_hash": "9f2c0b7e41d3a0c5e0b8a0f1c2d3e4f5a6b7c8d9e0f1a2b3c4d5e6f7a8b9c0d1",
        "config": {"patients": ["adult#001"], "controllers": ["pid", "tsode"], "seeds": [0]},
        "output_dir": "runs/cohort",
        "n_cells": 2,
        "created": "2024-06-01T12:00:00Z",
        "modified": "2024-06-01T12:00:00Z",
    },
    response_only=True,
    status_codes=[status.HTTP_200_OK],
)

METRICS_RESPONSE = OpenApiExample(
    "Metrics",
    value={
        "patient": "adult#001",
        "controller": "tsode",
        "seed": 0,
        "status": "ok",
        "tir": 83.75,
        "time_below_70": 8.83,
        "time_below_54": 0.4,
        "time_above_180": 7.42,
        "mean_bg": 131.2,
        "eval_days": 14.0,
        "error": "",
    },
    response_only=True,
    status_codes=[status.HTTP_200_OK],
)
