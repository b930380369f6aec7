"""Minimal reverse-mode autodiff engine and NN layers."""

from . import ops
from .layers import BatchNorm, Conv2d, ConvBlock, Fire, Linear, Module, kaiming_uniform
from .optim import Adam
from .tensor import Tensor, as_tensor

__all__ = [
    "Adam",
    "BatchNorm",
    "Conv2d",
    "ConvBlock",
    "Fire",
    "Linear",
    "Module",
    "Tensor",
    "as_tensor",
    "kaiming_uniform",
    "ops",
]
