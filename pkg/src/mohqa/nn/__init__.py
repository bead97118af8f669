from .layers import (
    Activations,
    Conv2D,
    Dense,
    Flatten,
    GradientTape,
    Network,
    ReLU,
    mse_loss,
)
from .optim import SGD, Adam, UpdateStats
from .checkpoint import load_arrays, load_network, save_arrays, save_network

__all__ = [
    "Activations",
    "Conv2D",
    "Dense",
    "Flatten",
    "GradientTape",
    "Network",
    "ReLU",
    "mse_loss",
    "SGD",
    "Adam",
    "UpdateStats",
    "save_network",
    "load_network",
    "save_arrays",
    "load_arrays",
]
