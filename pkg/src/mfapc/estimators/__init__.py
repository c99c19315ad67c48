from .checkpoint import load_checkpoint, save_checkpoint
from .mlp import MLPEstimator, full_form_regressor, sigmoid, train_offline
from .rbf import RBFEstimator
from .tuner import LambdaTuner

__all__ = [
    "LambdaTuner",
    "MLPEstimator",
    "full_form_regressor",
    "RBFEstimator",
    "load_checkpoint",
    "save_checkpoint",
    "sigmoid",
    "train_offline",
]
