from pathlib import Path

import numpy as np
import pytest

from glucose_control.diffkit import GruCell, assign, load_checkpoint, save_checkpoint
from glucose_control.utils.exceptions import ConfigurationFault


def test_round_trip_is_bit_exact(tmp_path: Path):
    cell = GruCell(7, 6, np.random.default_rng(4))
    extras = {"feature_mean": np.random.default_rng(5).normal(size=7)}
    path = tmp_path / "gru.npz"
    save_checkpoint(path, cell.parameters(), extras)

    params, loaded_extras = load_checkpoint(path)
    assert set(params) == set(cell.parameters())
    for name, param in cell.parameters().items():
        assert params[name].tobytes() == param.values.tobytes()
        assert params[name].shape == param.shape
    assert loaded_extras["feature_mean"].tobytes() == extras["feature_mean"].tobytes()


def test_assign_restores_parameters(tmp_path: Path):
    source = GruCell(3, 4, np.random.default_rng(1))
    target = GruCell(3, 4, np.random.default_rng(2))
    save_checkpoint(tmp_path / "gru.npz", source.parameters())
    params, _ = load_checkpoint(tmp_path / "gru.npz")
    assign(target.parameters(), params)
    for name, param in target.parameters().items():
        np.testing.assert_array_equal(param.values, source.parameters()[name].values)


def test_assign_rejects_shape_mismatch(tmp_path: Path):
    save_checkpoint(tmp_path / "gru.npz", GruCell(3, 4, np.random.default_rng(1)).parameters())
    params, _ = load_checkpoint(tmp_path / "gru.npz")
    with pytest.raises(ConfigurationFault):
        assign(GruCell(3, 5, np.random.default_rng(1)).parameters(), params)
