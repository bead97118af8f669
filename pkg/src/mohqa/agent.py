"""Combined Hebbian-plus-Q agent and the plain DQN baseline.

A single network maps the 12x12 observation to Q-values; the 64-unit
activation feeding its final linear layer is the shared feature vector
that also drives the Hebbian head. Acting sums the Q-values with the
head's one-hot vote; the TD target bootstraps through the same sum
evaluated with target-network parameters. With the Hebbian head disabled
everything reduces exactly to vanilla DQN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import AgentConfig, ExperimentConfig, MohnConfig, config_hash
from .ctgraph import OBS_SHAPE, CTGraphEnv
from .errors import NumericError
from .dqn import EpsilonSchedule, ReplayMemory, TargetNetworkPair, Transition, epsilon_greedy
from .mohn import MohnParams, MohnState
from .nn import Adam, Conv2D, Dense, Flatten, Network, ReLU
from .rng import spawn_rngs

__all__ = [
    "FEATURE_DIM",
    "build_q_network",
    "combined_q",
    "RunRecord",
    "RunResult",
    "MohqaAgent",
    "train",
]

FEATURE_DIM = 64


def build_q_network(n_actions: int, seed: int | None = None) -> Network:
    """Conv body (12x12x1 -> 10x10x16 -> 4x4x32) + dense feature layer + Q head.

    The input of the final Dense layer is the 64-dim feature vector shared
    with the Hebbian head.
    """
    return Network(
        [
            Conv2D(1, 16, kernel=3, stride=1),
            ReLU(),
            Conv2D(16, 32, kernel=3, stride=2),
            ReLU(),
            Flatten(),
            Dense(512, FEATURE_DIM),
            ReLU(),
            Dense(FEATURE_DIM, n_actions),
        ],
        seed=seed,
    )


def combined_q(v_do: np.ndarray, v_mo: np.ndarray) -> np.ndarray:
    """Elementwise sum of the Q head and the one-hot Hebbian vote."""
    v_do = np.asarray(v_do, dtype=float)
    v_mo = np.asarray(v_mo, dtype=float)
    if v_do.shape != v_mo.shape:
        raise ValueError(f"shape mismatch {v_do.shape} != {v_mo.shape}")
    return v_do + v_mo


@dataclass(frozen=True)
class RunRecord:
    episode: int
    reward: float
    length: int
    epsilon: float


@dataclass(frozen=True)
class RunResult:
    seed: int
    config_digest: str
    agent_kind: str
    records: list[RunRecord]


class MohqaAgent:
    """Owns the networks, replay memory, exploration state and (optionally)
    the Hebbian head. agent_kind 'dqn' disables the head entirely."""

    def __init__(
        self,
        n_actions: int,
        agent_cfg: AgentConfig,
        mohn_cfg: MohnConfig | None,
        seed: int,
    ):
        init_rng, self._explore_rng, self._sample_rng = spawn_rngs(seed, 3)
        self.n_actions = n_actions
        self.cfg = agent_cfg
        self.online = build_q_network(n_actions)
        self.online.init_params(init_rng)
        self.pair = TargetNetworkPair([self.online], agent_cfg.target_sync)
        self.target = self.pair.target[0]
        self.memory = ReplayMemory(agent_cfg.replay_capacity)
        self.optimizer = Adam(lr=agent_cfg.lr)
        self.schedule = EpsilonSchedule(
            agent_cfg.eps_start, agent_cfg.eps_end, agent_cfg.eps_decay_steps
        )
        self.global_step = 0
        if mohn_cfg is None:
            self.mohn = None
        else:
            params = MohnParams(
                theta_pct=mohn_cfg.theta_pct,
                tau_e=mohn_cfg.tau_e,
                baseline=mohn_cfg.baseline,
                running_avg_alpha=mohn_cfg.running_avg_alpha,
                post_synaptic=mohn_cfg.post_synaptic,
                pre_synaptic=mohn_cfg.pre_synaptic,
            )
            self.mohn = MohnState(n_actions, FEATURE_DIM, params)

    # -- acting ---------------------------------------------------------------

    def _forward_single(self, net: Network, flat_obs: np.ndarray):
        x = np.asarray(flat_obs, dtype=float).reshape(1, 1, *OBS_SHAPE)
        acts = net.forward(x)
        return acts.output[0], acts.inputs[-1][0]

    def features(self, flat_obs: np.ndarray) -> np.ndarray:
        """Body feature vector for an observation (online parameters)."""
        return self._forward_single(self.online, flat_obs)[1]

    def act(self, flat_obs: np.ndarray):
        """Select an action; returns (action, centered head input or None, eps)."""
        v_do, feats = self._forward_single(self.online, flat_obs)
        if self.mohn is not None:
            v_mi = self.mohn.observe_features(feats)
            v_o = combined_q(v_do, self.mohn.output(v_mi))
        else:
            v_mi = None
            v_o = v_do
        eps = self.schedule.value(self.global_step)
        action = epsilon_greedy(v_o, eps, self._explore_rng)
        return action, v_mi, eps

    # -- learning -------------------------------------------------------------

    def _batch_arrays(self, batch: list[Transition]):
        obs = np.stack([t.obs for t in batch]).reshape(-1, 1, *OBS_SHAPE)
        next_obs = np.stack([t.next_obs for t in batch]).reshape(-1, 1, *OBS_SHAPE)
        actions = np.array([t.action for t in batch], dtype=np.intp)
        rewards = np.array([t.reward for t in batch])
        done = np.array([t.done for t in batch], dtype=float)
        return obs, actions, rewards, next_obs, done

    def td_loss(self, batch: list[Transition]):
        """Squared TD error of the combined target; returns (loss, tape).

        Targets are constants: gradients flow only into Q(s, a) through the
        online network. The Hebbian weights never receive a gradient. For
        terminal transitions the target is the raw reward.
        """
        if not batch:
            raise ValueError("empty batch")
        obs, actions, rewards, next_obs, done = self._batch_arrays(batch)
        B = len(batch)

        target_acts = self.target.forward(next_obs)
        next_q = target_acts.output
        if self.mohn is not None:
            next_feats = target_acts.inputs[-1]
            centered = next_feats - self.mohn.running_avg
            scores = centered @ self.mohn.weights.T
            votes = np.zeros_like(next_q)
            votes[np.arange(B), np.argmax(scores, axis=1)] = 1.0
            next_q = next_q + votes
        bootstrap = next_q.max(axis=1)
        targets = rewards + self.cfg.gamma * bootstrap * (1.0 - done)

        acts = self.online.forward(obs)
        q_sa = acts.output[np.arange(B), actions]
        err = q_sa - targets
        if not np.all(np.isfinite(err)):
            raise NumericError("non-finite TD error")
        loss = float(np.mean(err * err))
        grad_out = np.zeros_like(acts.output)
        grad_out[np.arange(B), actions] = 2.0 * err / B
        tape = self.online.backward(acts, grad_out)
        return loss, tape

    def learn_step(self) -> float | None:
        if len(self.memory) < self.cfg.batch_size:
            return None
        batch = self.memory.sample(self.cfg.batch_size, self._sample_rng)
        loss, tape = self.td_loss(batch)
        self.optimizer.step(self.online, tape)
        return loss


def train(
    config: ExperimentConfig,
    env: CTGraphEnv,
    agent: MohqaAgent,
    agent_kind: str = "mohqa",
    seed: int = 0,
    stop_fn=None,
) -> RunResult:
    """Full training loop; one RunRecord per episode.

    Per-step order: select action -> env step -> trace update -> Hebbian
    weight update -> replay store -> periodic gradient step -> periodic
    target sync. Traces reset at every episode boundary.
    """
    run = config.run
    records: list[RunRecord] = []
    for episode in range(run.episodes):
        obs = env.reset().ravel()
        if agent.mohn is not None:
            agent.mohn.reset_traces()
        total_reward = 0.0
        length = 0
        eps = agent.schedule.value(agent.global_step)
        for _ in range(run.max_steps_per_episode):
            action, v_mi, eps = agent.act(obs)
            result = env.step(action)
            next_obs = result.observation.ravel()
            if agent.mohn is not None:
                agent.mohn.step_update(v_mi, action, result.reward)
            agent.memory.push(Transition(obs, action, result.reward, next_obs, result.done))
            agent.global_step += 1
            if agent.global_step % agent.cfg.learn_every == 0:
                agent.learn_step()
            agent.pair.maybe_sync()
            total_reward += result.reward
            length += 1
            obs = next_obs
            if result.done:
                break
        records.append(RunRecord(episode, total_reward, length, eps))
        if stop_fn is not None and stop_fn(records):
            break
    return RunResult(
        seed=seed, config_digest=config_hash(config), agent_kind=agent_kind, records=records
    )
