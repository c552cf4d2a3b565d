from .layers import BatchNormLayer, ConvLayer
from .model import (
    DEFAULT_FILTERS,
    DEFAULT_KERNELS,
    Model,
    ResidualBlock,
    build_model,
    cross_entropy,
    softmax,
)
from .optim import AdamState, adam_step
from .serialize import load_model, save_model
from .train import TrainConfig, TrainHistory, batch_forward, evaluate_loss, predict, train

__all__ = [
    "AdamState",
    "BatchNormLayer",
    "ConvLayer",
    "DEFAULT_FILTERS",
    "DEFAULT_KERNELS",
    "Model",
    "ResidualBlock",
    "TrainConfig",
    "TrainHistory",
    "adam_step",
    "batch_forward",
    "build_model",
    "cross_entropy",
    "evaluate_loss",
    "load_model",
    "predict",
    "save_model",
    "softmax",
    "train",
]
