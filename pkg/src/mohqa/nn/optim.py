"""First-order optimizers for the layer stack."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError
from .layers import GradientTape, Network

__all__ = ["UpdateStats", "SGD", "Adam"]


@dataclass(frozen=True)
class UpdateStats:
    max_abs_update: float
    rms_update: float


def _check_tape(net: Network, tape: GradientTape) -> list[np.ndarray]:
    params = net.parameters()
    if len(tape.grads) != len(params):
        raise ValueError("tape does not match network parameters")
    for p, g in zip(params, tape.grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient in tape; aborting")
    return params


def _stats(updates: list[np.ndarray]) -> UpdateStats:
    total = sum(float(np.sum(u * u)) for u in updates)
    count = sum(u.size for u in updates)
    max_abs = max((float(np.max(np.abs(u))) for u in updates), default=0.0)
    return UpdateStats(max_abs_update=max_abs, rms_update=float(np.sqrt(total / max(count, 1))))


class SGD:
    def __init__(self, lr: float = 1e-2):
        self.lr = lr

    def step(self, net: Network, tape: GradientTape) -> UpdateStats:
        params = _check_tape(net, tape)
        updates = [self.lr * g for g in tape.grads]
        for p, u in zip(params, updates):
            p -= u
        net._version += 1
        net.assert_finite()
        return _stats(updates)


class Adam:
    """Adam with bias correction; moments (0.9, 0.999), eps 1e-8 by default."""

    def __init__(self, lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None

    def step(self, net: Network, tape: GradientTape) -> UpdateStats:
        params = _check_tape(net, tape)
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        updates = []
        for m, v, g in zip(self._m, self._v, tape.grads):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            updates.append(self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps))
        for p, u in zip(params, updates):
            p -= u
        net._version += 1
        net.assert_finite()
        return _stats(updates)
