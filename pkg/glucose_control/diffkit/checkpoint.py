"""Versioned ``.npz`` checkpoints: named, shaped, row-major float64 arrays that round-trip bit-exactly."""
import logging
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from glucose_control.utils.exceptions import ConfigurationFault

from .tensor import Parameter

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
_PARAM_PREFIX = "param/"
_EXTRA_PREFIX = "extra/"


def save_checkpoint(
    path: Path, params: Mapping[str, Parameter], extras: Mapping[str, np.ndarray] | None = None
) -> None:
    arrays = {"version": np.array(CHECKPOINT_VERSION)}
    arrays.update({f"{_PARAM_PREFIX}{name}": np.ascontiguousarray(p.values) for name, p in params.items()})
    arrays.update({f"{_EXTRA_PREFIX}{name}": np.asarray(value) for name, value in (extras or {}).items()})
    with open(path, "wb") as handle:
        np.savez(handle, **arrays)
    logger.debug("Saved %d parameters to %s", len(params), path)


def load_checkpoint(path: Path) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """:return: ``(parameters, extras)`` keyed by name."""
    with np.load(path, allow_pickle=False) as archive:
        version = int(archive["version"])
        if version != CHECKPOINT_VERSION:
            raise ConfigurationFault(f"Unsupported checkpoint version {version} in '{path}'.")
        params = {key[len(_PARAM_PREFIX):]: archive[key] for key in archive.files if key.startswith(_PARAM_PREFIX)}
        extras = {key[len(_EXTRA_PREFIX):]: archive[key] for key in archive.files if key.startswith(_EXTRA_PREFIX)}
    return params, extras


def assign(params: Mapping[str, Parameter], values: Mapping[str, np.ndarray]) -> None:
    """Copy loaded arrays into existing parameters, checking names and shapes."""
    missing = set(params) - set(values)
    if missing:
        raise ConfigurationFault(f"Checkpoint lacks parameter(s): {', '.join(sorted(missing))}.")
    for name, param in params.items():
        if values[name].shape != param.shape:
            raise ConfigurationFault(f"Shape mismatch for '{name}': {values[name].shape} vs {param.shape}.")
        param.values[...] = values[name]
