"""Standard DQN machinery: replay memory, target-network pair, exploration.

These pieces are agnostic to how the TD target is formed, so the combined
agent can plug its own target (DQN head plus Hebbian head) into the same
loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .nn import Network

__all__ = [
    "Transition",
    "ReplayMemory",
    "EpsilonSchedule",
    "TargetNetworkPair",
    "epsilon_greedy",
]


@dataclass(frozen=True)
class Transition:
    """One replay record; observations are flat 144-element vectors."""

    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    done: bool


class ReplayMemory:
    """FIFO ring buffer sampled uniformly with replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._buffer: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._buffer)

    def push(self, transition: Transition) -> None:
        if len(self._buffer) < self.capacity:
            self._buffer.append(transition)
        else:
            self._buffer[self._next] = transition
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if not self._buffer:
            raise LookupError("replay memory is empty; nothing to sample")
        idx = rng.integers(0, len(self._buffer), size=batch_size)
        return [self._buffer[i] for i in idx]

    def snapshot(self) -> list[Transition]:
        """Contents in insertion order, oldest first."""
        return self._buffer[self._next :] + self._buffer[: self._next] if len(
            self._buffer
        ) == self.capacity else list(self._buffer)


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear decay from start to end over decay_steps, then constant."""

    start: float = 1.0
    end: float = 0.05
    decay_steps: int = 50_000

    def __post_init__(self):
        if not (0.0 <= self.end <= self.start <= 1.0):
            raise ConfigError("epsilon schedule must satisfy 0 <= end <= start <= 1")
        if self.decay_steps < 1:
            raise ConfigError("eps_decay_steps must be >= 1")

    def value(self, step: int) -> float:
        if step >= self.decay_steps:
            return self.end
        frac = step / self.decay_steps
        return self.start + frac * (self.end - self.start)


def epsilon_greedy(q_values: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Random action with probability epsilon, else argmax (lowest index wins ties)."""
    q_values = np.asarray(q_values)
    if q_values.size == 0:
        raise ValueError("q_values must be non-empty")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(0, q_values.size))
    return int(np.argmax(q_values))


class TargetNetworkPair:
    """Online networks plus a delayed copy synced every sync_period calls."""

    def __init__(self, online: list[Network], sync_period: int):
        if sync_period < 1:
            raise ConfigError(f"target_sync must be >= 1, got {sync_period}")
        self.online = online
        self.target = [Network.from_spec(net.spec()) for net in online]
        self.sync_period = sync_period
        self.steps_since_sync = 0
        self._copy_to_target()

    def _copy_to_target(self) -> None:
        for src, dst in zip(self.online, self.target):
            dst.set_parameters(src.copy_parameters())

    def maybe_sync(self) -> bool:
        self.steps_since_sync += 1
        if self.steps_since_sync >= self.sync_period:
            self._copy_to_target()
            self.steps_since_sync = 0
            return True
        return False
