from .adam import Adam, NanGradientError
from .checkpoint import load_checkpoint, save_checkpoint
from .contract import contract, contract_t, uncontract
from .hashgrid import FeatureGrid
from .mlp import TinyMlp
from .tensor import Tensor, as_tensor, backward, concat, parameter_gradients

__all__ = [
    "Adam",
    "NanGradientError",
    "FeatureGrid",
    "TinyMlp",
    "Tensor",
    "as_tensor",
    "backward",
    "concat",
    "contract",
    "contract_t",
    "uncontract",
    "load_checkpoint",
    "parameter_gradients",
    "save_checkpoint",
]
