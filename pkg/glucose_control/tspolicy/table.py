"""Per (state, action) reward statistics and Thompson Sampling over them."""
from __future__ import annotations

import enum
import logging
import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from glucose_control.utils.exceptions import ConfigurationFault, NumericalFault

logger = logging.getLogger(__name__)

PRIOR_MEAN = 0.0
PRIOR_VAR = 1.0
TABLE_COLUMNS = ["state", "action", "n", "mean", "variance"]


class Mode(str, enum.Enum):
    EXPLORE = "explore"
    GREEDY = "greedy"


class PolicyTable:
    """
    Welford running mean and sum of squared deviations of the shaped reward per ``(s, a)``.

    ``prior_mean``/``prior_var`` describe an arm with fewer than two observations.
    """

    def __init__(self, n_states: int, n_actions: int, prior_mean: float = PRIOR_MEAN, prior_var: float = PRIOR_VAR):
        if n_states < 1 or n_actions < 1:
            raise ConfigurationFault(f"Table needs at least one state and action, got {n_states}x{n_actions}.")
        if prior_var <= 0:
            raise ConfigurationFault(f"Prior variance must be positive, got {prior_var}.")
        self.n = np.zeros((n_states, n_actions), dtype=np.int64)
        self.mean = np.zeros((n_states, n_actions))
        self.m2 = np.zeros((n_states, n_actions))
        self.prior_mean = prior_mean
        self.prior_var = prior_var

    @property
    def shape(self) -> tuple[int, int]:
        return self.n.shape

    def update(self, state: int, action: int, reward: float) -> None:
        if not math.isfinite(reward):
            raise NumericalFault("Non-finite reward", state=state, action=action)
        self.n[state, action] += 1
        delta = reward - self.mean[state, action]
        self.mean[state, action] += delta / self.n[state, action]
        self.m2[state, action] += delta * (reward - self.mean[state, action])

    def variance(self, state: int, action: int) -> float:
        """Sample variance; NaN below two observations."""
        n = self.n[state, action]
        return float(self.m2[state, action] / (n - 1)) if n >= 2 else math.nan

    def copy(self) -> PolicyTable:
        clone = PolicyTable(*self.shape, prior_mean=self.prior_mean, prior_var=self.prior_var)
        clone.n[:] = self.n
        clone.mean[:] = self.mean
        clone.m2[:] = self.m2
        return clone


def select(table: PolicyTable, state: int, rng: np.random.Generator | None, mode: Mode | str) -> int:
    """
    Action index for ``state``.

    Explore draws each arm from ``Normal(mean, var / n)`` (the prior below two observations) and
    takes the argmax. Greedy takes the argmax of the means, unvisited arms at the prior mean. Ties
    go to the lowest index.
    """
    mode = Mode(mode)
    n = table.n[state]
    if mode is Mode.GREEDY:
        values = np.where(n >= 1, table.mean[state], table.prior_mean)
        return int(np.argmax(values))
    if rng is None:
        raise ConfigurationFault("Explore mode needs a random generator.")
    seen = n >= 2
    loc = np.where(seen, table.mean[state], table.prior_mean)
    var = np.where(seen, table.m2[state] / np.maximum(n - 1, 1) / np.maximum(n, 1), table.prior_var)
    draws = rng.normal(loc, np.sqrt(var))
    return int(np.argmax(draws))


def merge_tables(tables: Sequence[PolicyTable]) -> PolicyTable:
    """Pool tables cell by cell: counts add, means and squared deviations combine exactly."""
    if not tables:
        raise ConfigurationFault("Nothing to merge.")
    shape = tables[0].shape
    if any(t.shape != shape for t in tables):
        raise ConfigurationFault("Cannot merge tables of different shapes.")
    merged = PolicyTable(*shape, prior_mean=tables[0].prior_mean, prior_var=tables[0].prior_var)
    merged.n = sum(t.n for t in tables)
    weighted = sum(t.n * t.mean for t in tables)
    merged.mean = np.divide(weighted, merged.n, out=np.zeros(shape), where=merged.n > 0)
    merged.m2 = sum(t.m2 + t.n * (t.mean - merged.mean) ** 2 for t in tables)
    return merged


def dump_table_csv(table: PolicyTable, path: Path) -> None:
    states, actions = np.indices(table.shape)
    n = table.n.ravel()
    variance = np.divide(table.m2.ravel(), n - 1, out=np.full(n.shape, np.nan), where=n >= 2)
    frame = pd.DataFrame(
        {
            "state": states.ravel(),
            "action": actions.ravel(),
            "n": n,
            "mean": table.mean.ravel(),
            "variance": variance,
        },
        columns=TABLE_COLUMNS,
    )
    frame.to_csv(path, index=False)
    logger.debug("Wrote policy table %s (%d visits)", path, int(n.sum()))


def load_table_csv(path: Path, prior_mean: float = PRIOR_MEAN, prior_var: float = PRIOR_VAR) -> PolicyTable:
    frame = pd.read_csv(path, float_precision="round_trip")
    if list(frame.columns) != TABLE_COLUMNS:
        raise ConfigurationFault(f"Unexpected policy table header in {path}: {list(frame.columns)}.")
    table = PolicyTable(int(frame["state"].max()) + 1, int(frame["action"].max()) + 1, prior_mean, prior_var)
    s, a = frame["state"].to_numpy(), frame["action"].to_numpy()
    n = frame["n"].to_numpy(dtype=np.int64)
    table.n[s, a] = n
    table.mean[s, a] = frame["mean"].to_numpy()
    table.m2[s, a] = np.where(n >= 2, frame["variance"].fillna(0.0).to_numpy() * (n - 1), 0.0)
    return table
