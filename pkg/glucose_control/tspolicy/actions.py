from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from glucose_control.utils.exceptions import ConfigurationFault


@dataclass(frozen=True)
class ActionGrid:
    """Bolus doses available to the policy, U."""

    doses: tuple[float, ...] = tuple(round(0.2 * i, 10) for i in range(16))

    def __post_init__(self):
        if not self.doses or self.doses[0] != 0.0:
            raise ConfigurationFault("The action grid must start at 0 U.")
        if any(a >= b for a, b in zip(self.doses, self.doses[1:])):
            raise ConfigurationFault(f"Action grid doses must be sorted and unique, got {self.doses}.")

    @classmethod
    def uniform(cls, maximum: float, step: float) -> ActionGrid:
        count = int(round(maximum / step)) + 1
        return cls(tuple(round(step * i, 10) for i in range(count)))

    def __len__(self) -> int:
        return len(self.doses)

    def __getitem__(self, index: int) -> float:
        return self.doses[index]

    @property
    def maximum(self) -> float:
        return self.doses[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.doses)

    def index_of(self, dose: float) -> int:
        """Index of the grid value equal to ``dose`` (within 1e-9)."""
        matches = np.flatnonzero(np.abs(self.as_array() - dose) < 1e-9)
        if matches.size == 0:
            raise ConfigurationFault(f"{dose} U is not on the action grid.")
        return int(matches[0])

    def floor(self, dose: float) -> float:
        """Largest grid value not above ``dose`` (0 for negative input)."""
        index = int(np.searchsorted(self.as_array(), dose + 1e-9, side="right")) - 1
        return self.doses[max(index, 0)]

    def nearest(self, dose: float) -> float:
        """Nearest grid value; exact midpoints resolve to the lower dose."""
        grid = self.as_array()
        upper = int(np.searchsorted(grid, dose, side="left"))
        if upper <= 0:
            return self.doses[0]
        if upper >= len(grid):
            return self.doses[-1]
        lower_gap, upper_gap = dose - grid[upper - 1], grid[upper] - dose
        return self.doses[upper] if upper_gap < lower_gap - 1e-9 else self.doses[upper - 1]


DEFAULT_GRID = ActionGrid()
