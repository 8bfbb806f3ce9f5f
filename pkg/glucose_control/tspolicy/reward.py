from collections.abc import Sequence

import numpy as np

from glucose_control.utils.exceptions import ConfigurationFault
from glucose_control.utils.glycemia import HYPO_THRESHOLD, SEVERE_HYPO_THRESHOLD, risk

HYPO_PENALTY = 10.0
SEVERE_HYPO_PENALTY = 20.0


def shaped_reward(bg_trace: Sequence[float]) -> float:
    """Negative mean Kovatchev risk over the interval minus flat penalties for any hypo / severe hypo sample."""
    bg = np.asarray(bg_trace, dtype=np.float64)
    if bg.size == 0:
        raise ConfigurationFault("Cannot score an empty glucose interval.")
    try:
        value = -float(np.mean(risk(bg)))
    except ValueError as exc:
        raise ConfigurationFault(str(exc)) from exc
    if np.any(bg < HYPO_THRESHOLD):
        value -= HYPO_PENALTY
    if np.any(bg < SEVERE_HYPO_THRESHOLD):
        value -= SEVERE_HYPO_PENALTY
    return value
