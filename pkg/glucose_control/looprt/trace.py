"""Trace CSV (one step per row, fixed column order) with a JSON metadata sidecar."""
from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from dataclasses import fields
from pathlib import Path
from typing import Any

import pandas as pd

from glucose_control.utils.exceptions import ConfigurationFault

from .runtime import StepRecord

TRACE_COLUMNS = [f.name for f in fields(StepRecord) if f.name != "verdict"]


def sidecar_path(path: Path) -> Path:
    return Path(path).with_suffix(".json")


def trace_frame(records: Sequence[StepRecord]) -> pd.DataFrame:
    return pd.DataFrame([[getattr(r, name) for name in TRACE_COLUMNS] for r in records], columns=TRACE_COLUMNS)


def write_trace_csv(records: Sequence[StepRecord], path: Path, metadata: Mapping[str, Any] | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(records).to_csv(path, index=False)
    if metadata is not None:
        sidecar_path(path).write_text(json.dumps(dict(metadata), indent=2, sort_keys=True) + "\n")


def read_trace_csv(path: Path) -> pd.DataFrame:
    frame = pd.read_csv(path, float_precision="round_trip")
    if list(frame.columns) != TRACE_COLUMNS:
        raise ConfigurationFault(f"{path} does not have the trace header.")
    return frame


def read_trace_metadata(path: Path) -> dict[str, Any]:
    sidecar = sidecar_path(path)
    return json.loads(sidecar.read_text()) if sidecar.exists() else {}


def records_from_frame(frame: pd.DataFrame) -> list[StepRecord]:
    return [StepRecord(**row) for row in frame.to_dict(orient="records")]
