from .checkpoint import load_checkpoint, save_checkpoint
from .mlp import (
    COMPONENTS,
    InputJet,
    Jet,
    LossGradient,
    Mlp,
    ParamGrad,
    TrackedMlp,
    forward,
    forward_jet,
    loss_gradient,
    softplus,
    xavier_init,
)
from .tape import Var, backward

__all__ = [
    "COMPONENTS", "InputJet", "Jet", "LossGradient", "Mlp", "ParamGrad", "TrackedMlp",
    "Var", "backward", "forward", "forward_jet", "load_checkpoint", "loss_gradient", "save_checkpoint",
    "softplus", "xavier_init",
]
