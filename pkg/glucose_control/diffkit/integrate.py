from collections.abc import Callable

from glucose_control.utils.exceptions import ConfigurationFault

from . import tensor as T
from .tensor import Tensor


def rk4_integrate(f: Callable[[Tensor], Tensor], z0: Tensor, n_steps: int, h: float) -> list[Tensor]:
    """
    Classical fixed-step RK4 for the autonomous flow ``dz/dt = f(z)``.

    Every stage is an ordinary graph operation, so gradients are those of the discrete scheme.

    :return: ``[z_1, ..., z_n_steps]``
    :raise NumericalFault: with the failing step index when a state becomes non-finite.
    """
    if n_steps < 1:
        raise ConfigurationFault(f"n_steps must be at least 1, got {n_steps}.")
    if h <= 0:
        raise ConfigurationFault(f"Step size must be positive, got {h}.")

    trajectory = []
    z = z0
    for index in range(n_steps):
        k1 = f(z)
        k2 = f(T.add(z, T.scale(k1, h / 2)))
        k3 = f(T.add(z, T.scale(k2, h / 2)))
        k4 = f(T.add(z, T.scale(k3, h)))
        slope = T.add(T.add(k1, T.scale(T.add(k2, k3), 2.0)), k4)
        z = T.add(z, T.scale(slope, h / 6))
        T.check_finite(z, "Latent trajectory became non-finite", step=index + 1)
        trajectory.append(z)
    return trajectory
