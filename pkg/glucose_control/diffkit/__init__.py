from .checkpoint import CHECKPOINT_VERSION, assign, load_checkpoint, save_checkpoint
from .gradcheck import check_gradients, numerical_gradient
from .integrate import rk4_integrate
from .layers import Dense, GruCell, Mlp, Module, forward_gru
from .optim import Adam, Moments, adam_step
from .tensor import Graph, Parameter, Tensor, backward

__all__ = [
    "Adam",
    "CHECKPOINT_VERSION",
    "Dense",
    "Graph",
    "GruCell",
    "Mlp",
    "Module",
    "Moments",
    "Parameter",
    "Tensor",
    "adam_step",
    "assign",
    "backward",
    "check_gradients",
    "forward_gru",
    "load_checkpoint",
    "numerical_gradient",
    "rk4_integrate",
    "save_checkpoint",
]
