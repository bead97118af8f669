"""Minimal differentiable layer stack: Conv2D, ReLU, Flatten, Dense.

All math is float64 so finite-difference gradient checks hold at tight
tolerances. A Network owns an ordered list of layers; forward returns an
Activations record caching each layer's input, and backward turns a loss
gradient at the output into a GradientTape aligned with parameters().
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError
from . import kernels

__all__ = [
    "Conv2D",
    "ReLU",
    "Flatten",
    "Dense",
    "Network",
    "Activations",
    "GradientTape",
    "mse_loss",
]


class Conv2D:
    """Valid-padding square convolution, NCHW layout."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int, stride: int = 1):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.weight = np.zeros((out_channels, in_channels, kernel, kernel))
        self.bias = np.zeros(out_channels)

    @property
    def params(self):
        return [self.weight, self.bias]

    def init_params(self, rng: np.random.Generator) -> None:
        fan_in = self.in_channels * self.kernel * self.kernel
        bound = np.sqrt(6.0 / fan_in)
        self.weight = rng.uniform(-bound, bound, size=self.weight.shape)
        self.bias = np.zeros(self.out_channels)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ValueError(f"expected input (B, {self.in_channels}, H, W), got {x.shape}")
        return kernels.conv2d_forward(x, self.weight, self.bias, self.stride)

    def backward(self, x: np.ndarray, grad_out: np.ndarray):
        gx, gw, gb = kernels.conv2d_backward(x, self.weight, self.stride, grad_out)
        return gx, [gw, gb]

    def spec(self):
        return {
            "type": "conv2d",
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel": self.kernel,
            "stride": self.stride,
        }


class ReLU:
    params: list = []

    def init_params(self, rng) -> None:
        pass

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(x, 0.0)

    def backward(self, x: np.ndarray, grad_out: np.ndarray):
        return grad_out * (x > 0.0), []

    def spec(self):
        return {"type": "relu"}


class Flatten:
    """Collapse all but the batch dimension, row-major."""

    params: list = []

    def init_params(self, rng) -> None:
        pass

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(x.shape[0], -1)

    def backward(self, x: np.ndarray, grad_out: np.ndarray):
        return grad_out.reshape(x.shape), []

    def spec(self):
        return {"type": "flatten"}


class Dense:
    def __init__(self, in_dim: int, out_dim: int):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = np.zeros((out_dim, in_dim))
        self.bias = np.zeros(out_dim)

    @property
    def params(self):
        return [self.weight, self.bias]

    def init_params(self, rng: np.random.Generator) -> None:
        bound = np.sqrt(6.0 / self.in_dim)
        self.weight = rng.uniform(-bound, bound, size=self.weight.shape)
        self.bias = np.zeros(self.out_dim)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"expected input (B, {self.in_dim}), got {x.shape}")
        return x @ self.weight.T + self.bias

    def backward(self, x: np.ndarray, grad_out: np.ndarray):
        gw = grad_out.T @ x
        gb = grad_out.sum(axis=0)
        gx = grad_out @ self.weight
        return gx, [gw, gb]

    def spec(self):
        return {"type": "dense", "in_dim": self.in_dim, "out_dim": self.out_dim}


@dataclass
class Activations:
    """Per-layer inputs cached by forward, consumed once by backward."""

    inputs: list[np.ndarray]
    output: np.ndarray
    net_id: int
    version: int


@dataclass
class GradientTape:
    """Gradients aligned one-to-one with Network.parameters()."""

    grads: list[np.ndarray]


class Network:
    """Ordered layer stack with explicit forward/backward passes."""

    def __init__(self, layers: list, seed: int | None = None):
        self.layers = layers
        self._version = 0
        if seed is not None:
            self.init_params(np.random.Generator(np.random.Philox(np.random.SeedSequence(seed))))

    def init_params(self, rng: np.random.Generator) -> None:
        for layer in self.layers:
            layer.init_params(rng)
        self._version += 1

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    def forward(self, x: np.ndarray) -> Activations:
        inputs = []
        for layer in self.layers:
            inputs.append(x)
            x = layer.forward(x)
        return Activations(inputs=inputs, output=x, net_id=id(self), version=self._version)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x).output

    def backward(self, acts: Activations, grad_output: np.ndarray) -> GradientTape:
        if acts.net_id != id(self):
            raise ValueError("activations were produced by a different network")
        if acts.version != self._version:
            raise ValueError("stale activations: parameters changed since forward")
        if grad_output.shape != acts.output.shape:
            raise ValueError(
                f"grad_output shape {grad_output.shape} != output shape {acts.output.shape}"
            )
        grads: list[np.ndarray] = []
        g = grad_output
        for layer, x in zip(reversed(self.layers), reversed(acts.inputs)):
            g, layer_grads = layer.backward(x, g)
            grads = layer_grads + grads
        return GradientTape(grads=grads)

    def set_parameters(self, values: list[np.ndarray]) -> None:
        params = self.parameters()
        if len(values) != len(params):
            raise ValueError("parameter count mismatch")
        for p, v in zip(params, values):
            if p.shape != v.shape:
                raise ValueError(f"shape mismatch {p.shape} != {v.shape}")
            p[...] = v
        self._version += 1

    def copy_parameters(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def assert_finite(self) -> None:
        for p in self.parameters():
            if not np.all(np.isfinite(p)):
                raise NumericError("non-finite network parameter detected")

    def spec(self):
        return [layer.spec() for layer in self.layers]

    @staticmethod
    def from_spec(layer_specs: list[dict]) -> "Network":
        builders = {
            "conv2d": lambda s: Conv2D(s["in_channels"], s["out_channels"], s["kernel"], s["stride"]),
            "relu": lambda s: ReLU(),
            "flatten": lambda s: Flatten(),
            "dense": lambda s: Dense(s["in_dim"], s["out_dim"]),
        }
        return Network([builders[s["type"]](s) for s in layer_specs])


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean-squared error over all elements and its gradient w.r.t. pred."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} != {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / diff.size
    return loss, grad
