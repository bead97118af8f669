"""Configurable tree-graph (CT-graph) POMDP environment.

The graph alternates wait states and decision points: home is wait stage 0,
one wait stage precedes each decision point and one precedes the leaves,
so a depth-d graph has d+1 wait stages and d decision points. The wait
action (0) is required at wait states, where the state self-loops with the
delay probability; one of the b act actions (1..b) is required at each
decision point and selects a subtree. Any other action ends the episode
with reward 0. Exactly one leaf pays reward 1.

Observations are 12x12 single-channel images built from 4x4 checker
patterns over the levels {0, 0.5, 1}, upscaled 3x (nearest neighbor) and
rotated by a multiple of 90 degrees. In Unique mode every reachable hidden
state has its own fixed image; in Confounding mode wait states redraw
uniformly from a shared N-image set on every visit, which hides the
underlying state from the agent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .rng import make_rng, spawn_rngs

__all__ = [
    "ObsMode",
    "CTGraphConfig",
    "StateKind",
    "HiddenState",
    "StepResult",
    "CTGraphEnv",
    "random_policy_success_prob",
    "estimate_random_policy_success",
]

OBS_SHAPE = (12, 12)
OBS_SIZE = 144
PIXEL_LEVELS = (0.0, 0.5, 1.0)


class ObsMode(enum.Enum):
    UNIQUE = "unique"
    CONFOUNDING = "confounding"


class StateKind(enum.Enum):
    WAIT = "wait"
    DECISION = "decision"
    LEAF = "leaf"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class HiddenState:
    """True (unobservable) MDP state: state type, stage and branch path."""

    kind: StateKind
    stage: int = 0
    path: tuple[int, ...] = ()


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray  # 12x12 float64
    reward: float
    done: bool


SEEDED_LEAF = "seeded"


@dataclass(frozen=True)
class CTGraphConfig:
    """Full environment parameterization."""

    branch_factor: int = 2
    depth: int = 1
    delay_prob: float = 0.0
    wait_obs_set_size: int = 64
    obs_mode: ObsMode = ObsMode.UNIQUE
    reward_leaf: int | str = SEEDED_LEAF  # leaf index or "seeded"
    env_seed: int = 0

    def __post_init__(self):
        if self.branch_factor < 2:
            raise ConfigError(f"branch_factor must be >= 2, got {self.branch_factor}")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if not 0.0 <= self.delay_prob < 1.0:
            raise ConfigError(f"delay_prob must be in [0, 1), got {self.delay_prob}")
        if self.wait_obs_set_size < 1:
            raise ConfigError("wait_obs_set_size must be >= 1")
        if isinstance(self.reward_leaf, str):
            if self.reward_leaf != SEEDED_LEAF:
                raise ConfigError(f"reward_leaf must be an index or 'seeded', got {self.reward_leaf!r}")
        elif not 0 <= self.reward_leaf < self.n_leaves:
            raise ConfigError(
                f"reward_leaf {self.reward_leaf} out of range [0, {self.n_leaves})"
            )
        if not 0 <= self.env_seed < 2**64:
            raise ConfigError("env_seed must be a 64-bit unsigned integer")

    @property
    def n_leaves(self) -> int:
        return self.branch_factor**self.depth

    @property
    def n_actions(self) -> int:
        return 1 + self.branch_factor


def _upscaled_pattern(base: np.ndarray, rotation: int) -> np.ndarray:
    """3x nearest-neighbor upscale of a 4x4 pattern, rotated by rotation*90 deg."""
    img = np.kron(base, np.ones((3, 3)))
    return np.ascontiguousarray(np.rot90(img, rotation))


def _generate_images(rng: np.random.Generator, count: int) -> list[np.ndarray]:
    """Distinct 12x12 images from random 4x4 three-level checker patterns."""
    images: list[np.ndarray] = []
    seen: set[bytes] = set()
    levels = np.asarray(PIXEL_LEVELS)
    while len(images) < count:
        base = levels[rng.integers(0, 3, size=(4, 4))]
        img = _upscaled_pattern(base, int(rng.integers(0, 4)))
        key = img.tobytes()
        if key in seen:
            continue
        seen.add(key)
        img.setflags(write=False)
        images.append(img)
    return images


def _leaf_index(path: tuple[int, ...], branch_factor: int) -> int:
    idx = 0
    for choice in path:
        idx = idx * branch_factor + choice
    return idx


class CTGraphEnv:
    """Seedable CT-graph POMDP with a reset/step episode interface.

    All randomness (observation tables, delay transitions, confounding
    wait draws) derives from config.env_seed, so two environments with
    identical configs produce identical sequences for identical actions.
    """

    def __init__(self, config: CTGraphConfig):
        self.config = config
        table_rng, self._episode_rng = spawn_rngs(config.env_seed, 2)

        if config.reward_leaf == SEEDED_LEAF:
            self.reward_leaf = int(table_rng.integers(0, config.n_leaves))
        else:
            self.reward_leaf = int(config.reward_leaf)

        self._build_observation_tables(table_rng)
        self._state: HiddenState | None = None
        self._done = True
        self._steps = 0

    # -- observation tables -------------------------------------------------

    def _reachable_states(self) -> list[HiddenState]:
        cfg = self.config
        states: list[HiddenState] = []
        prefixes: list[tuple[int, ...]] = [()]
        for stage in range(cfg.depth + 1):
            for path in prefixes:
                states.append(HiddenState(StateKind.WAIT, stage, path))
            if stage < cfg.depth:
                for path in prefixes:
                    states.append(HiddenState(StateKind.DECISION, stage, path))
                prefixes = [p + (c,) for p in prefixes for c in range(cfg.branch_factor)]
        states.extend(HiddenState(StateKind.LEAF, cfg.depth, p) for p in prefixes)
        return states

    def _build_observation_tables(self, rng: np.random.Generator) -> None:
        cfg = self.config
        states = self._reachable_states()
        self._fixed_obs: dict[HiddenState, np.ndarray] = {}
        if cfg.obs_mode is ObsMode.UNIQUE:
            images = _generate_images(rng, len(states))
            self._fixed_obs = dict(zip(states, images))
            self._wait_set: list[np.ndarray] = []
        else:
            non_wait = [s for s in states if s.kind is not StateKind.WAIT]
            images = _generate_images(rng, cfg.wait_obs_set_size + len(non_wait))
            self._wait_set = images[: cfg.wait_obs_set_size]
            self._fixed_obs = dict(zip(non_wait, images[cfg.wait_obs_set_size :]))
            # home keeps one fixed image out of the wait set
            home = HiddenState(StateKind.WAIT, 0, ())
            self._fixed_obs[home] = self._wait_set[
                int(rng.integers(0, cfg.wait_obs_set_size))
            ]
        self._terminal_obs = np.zeros(OBS_SHAPE)
        self._terminal_obs.setflags(write=False)

    def observe(self, state: HiddenState) -> np.ndarray:
        """Observation for a hidden state.

        Unique mode is an injective deterministic map. In Confounding mode
        wait states (other than home) draw from the shared wait set on
        every call, consuming the episode RNG stream.
        """
        if state.kind is StateKind.TERMINATED:
            return self._terminal_obs
        if state in self._fixed_obs:
            return self._fixed_obs[state]
        if state.kind is StateKind.WAIT:
            return self._wait_set[int(self._episode_rng.integers(0, len(self._wait_set)))]
        raise ValueError(f"state {state} is not reachable under this config")

    # -- episode interface ---------------------------------------------------

    @property
    def hidden_state(self) -> HiddenState | None:
        return self._state

    @property
    def done(self) -> bool:
        return self._done

    def reset(self) -> np.ndarray:
        self._state = HiddenState(StateKind.WAIT, 0, ())
        self._done = False
        self._steps = 0
        return self.observe(self._state)

    def step(self, action: int) -> StepResult:
        if self._done or self._state is None:
            raise RuntimeError("step() on a finished episode; call reset() first")
        cfg = self.config
        if not 0 <= action < cfg.n_actions:
            raise ValueError(f"action {action} out of range [0, {cfg.n_actions})")

        state = self._state
        self._steps += 1

        if state.kind is StateKind.WAIT:
            if action != 0:
                return self._terminate(reward=0.0)
            if cfg.delay_prob > 0.0 and self._episode_rng.random() < cfg.delay_prob:
                return StepResult(self.observe(state), 0.0, False)  # self-loop
            if state.stage == cfg.depth:
                return self._reach_leaf(state.path)
            self._state = HiddenState(StateKind.DECISION, state.stage, state.path)
            return StepResult(self.observe(self._state), 0.0, False)

        # decision point
        if action == 0:
            return self._terminate(reward=0.0)
        new_path = state.path + (action - 1,)
        self._state = HiddenState(StateKind.WAIT, state.stage + 1, new_path)
        return StepResult(self.observe(self._state), 0.0, False)

    def _reach_leaf(self, path: tuple[int, ...]) -> StepResult:
        leaf = HiddenState(StateKind.LEAF, self.config.depth, path)
        obs = self.observe(leaf)
        reward = 1.0 if _leaf_index(path, self.config.branch_factor) == self.reward_leaf else 0.0
        self._state = HiddenState(StateKind.TERMINATED)
        self._done = True
        return StepResult(obs, reward, True)

    def _terminate(self, reward: float) -> StepResult:
        self._state = HiddenState(StateKind.TERMINATED)
        self._done = True
        return StepResult(self._terminal_obs, reward, True)


def random_policy_success_prob(config: CTGraphConfig) -> float:
    """Closed-form success probability of a uniform random policy.

    Passing one wait stage requires drawing the wait action, possibly
    several times through the self-loop: P(pass) = (1-p)/(A-p) where
    A = 1+b. Each of the d decision points is passed with probability 1/A
    times the chance of picking the rewarded branch, giving
    P = [(1-p)/(A-p)]^(d+1) * (1/A)^d overall for the single rewarded leaf.
    """
    A = config.n_actions
    p = config.delay_prob
    wait_pass = (1.0 - p) / (A - p)
    return wait_pass ** (config.depth + 1) * (1.0 / A) ** config.depth


def estimate_random_policy_success(
    config: CTGraphConfig, episodes: int, seed: int = 0
) -> float:
    """Monte-Carlo success frequency of a uniform random policy."""
    env = CTGraphEnv(config)
    rng = make_rng(seed)
    n_actions = config.n_actions
    successes = 0
    for _ in range(episodes):
        env.reset()
        done = False
        while not done:
            result = env.step(int(rng.integers(0, n_actions)))
            done = result.done
        successes += int(result.reward > 0.0)
    return successes / episodes
