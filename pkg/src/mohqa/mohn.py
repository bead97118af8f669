"""Reward-modulated Hebbian head with neural eligibility traces.

The head is a single linear map from body features to actions, trained
without gradients: per-step Hebbian products are thresholded to sparse
+1/-1 terms, accumulated into a decaying eligibility-trace matrix, and the
traces are turned into weight changes by the raw reward plus a small
(negative) baseline. Weights stay clipped in [-1, 1]. The update
operations are pure functions over arrays; MohnState is a thin stateful
wrapper used by the agent loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "MohnParams",
    "MohnState",
    "centered_input",
    "hebbian_terms",
    "update_traces",
    "modulate_weights",
    "mohn_output",
    "one_hot",
]


def centered_input(features: np.ndarray, running_avg: np.ndarray, alpha: float):
    """Features minus their running average, plus the updated average.

    The pre-update average is used for the subtraction; the exponential
    moving average then absorbs the new features.
    """
    features = np.asarray(features, dtype=float)
    if features.shape != running_avg.shape:
        raise ValueError(f"feature shape {features.shape} != average shape {running_avg.shape}")
    v_mi = features - running_avg
    new_avg = (1.0 - alpha) * running_avg + alpha * features
    return v_mi, new_avg


def hebbian_terms(v_pre: np.ndarray, v_post: np.ndarray, theta_pct: float) -> np.ndarray:
    """Sparse +1/-1/0 matrix from thresholded Hebbian products.

    Products P[i][j] = v_pre[j] * v_post[i] (asymmetric window: v_pre is
    the input that preceded the postsynaptic activity). The k largest
    products get +1 and the k smallest get -1, k = ceil(theta_pct% of the
    matrix size), ties broken by ascending flat index and +1 winning where
    both would apply. If all products are equal (e.g. zero activity) there
    is no meaningful percentile and the matrix is all zeros.
    """
    if not 0.0 < theta_pct < 50.0:
        raise ConfigError(f"theta_pct must be in (0, 50), got {theta_pct}")
    v_pre = np.asarray(v_pre, dtype=float)
    v_post = np.asarray(v_post, dtype=float)
    products = np.outer(v_post, v_pre)
    flat = products.ravel()
    if flat[0] == flat.min() == flat.max():
        return np.zeros_like(products)
    k = math.ceil(theta_pct / 100.0 * flat.size)
    # stable argsort ascending: ties already resolve to the lower flat index
    order = np.argsort(flat, kind="stable")
    theta = np.zeros(flat.size)
    theta[order[:k]] = -1.0
    # top-k with ascending-index tie break: sort by (-value, index)
    top = np.lexsort((np.arange(flat.size), -flat))[:k]
    theta[top] = 1.0  # +1 wins at overlap
    return theta.reshape(products.shape)


def update_traces(traces: np.ndarray, theta: np.ndarray, tau_e: float) -> np.ndarray:
    """One forward-Euler step of the trace dynamics: E <- E(1 - 1/tau) + Theta."""
    if tau_e <= 1.0:
        raise ConfigError(f"tau_e must be > 1, got {tau_e}")
    if traces.shape != theta.shape:
        raise ValueError(f"trace shape {traces.shape} != theta shape {theta.shape}")
    return traces * (1.0 - 1.0 / tau_e) + theta


def modulate_weights(
    weights: np.ndarray, traces: np.ndarray, reward: float, baseline: float
) -> np.ndarray:
    """Reward-modulated update w <- clip(w + (r + baseline) * E, -1, 1)."""
    if weights.shape != traces.shape:
        raise ValueError(f"weight shape {weights.shape} != trace shape {traces.shape}")
    return np.clip(weights + (reward + baseline) * traces, -1.0, 1.0)


def one_hot(index: int, size: int) -> np.ndarray:
    out = np.zeros(size)
    out[index] = 1.0
    return out


def mohn_output(weights: np.ndarray, v_mi: np.ndarray) -> np.ndarray:
    """One-hot vector at the argmax of the per-action scores w . v_mi."""
    scores = weights @ v_mi
    return one_hot(int(np.argmax(scores)), scores.size)


@dataclass(frozen=True)
class MohnParams:
    theta_pct: float = 5.0
    tau_e: float = 20.0
    baseline: float = -0.01
    running_avg_alpha: float = 0.05
    # which postsynaptic vector feeds the Hebbian terms: the executed
    # action ("executed") or the head's own one-hot output ("own")
    post_synaptic: str = "executed"
    # presynaptic input: features from the step the action was taken on
    # ("current") or from the step before ("previous")
    pre_synaptic: str = "current"

    def __post_init__(self):
        if not 0.0 < self.theta_pct < 50.0:
            raise ConfigError(f"theta_pct must be in (0, 50), got {self.theta_pct}")
        if self.tau_e <= 1.0:
            raise ConfigError(f"tau_e must be > 1, got {self.tau_e}")
        if not 0.0 < self.running_avg_alpha <= 1.0:
            raise ConfigError("running_avg_alpha must be in (0, 1]")
        if self.post_synaptic not in ("executed", "own"):
            raise ConfigError(f"post_synaptic must be 'executed' or 'own', got {self.post_synaptic}")
        if self.pre_synaptic not in ("current", "previous"):
            raise ConfigError(f"pre_synaptic must be 'current' or 'previous', got {self.pre_synaptic}")


@dataclass
class MohnState:
    """Weights, traces and input statistics of the Hebbian head.

    Weights start at zero and stay in [-1, 1]. Traces are zeroed at every
    episode boundary; the running feature average persists across episodes
    because it tracks feature drift, not episode state.
    """

    n_actions: int
    n_features: int
    params: MohnParams = field(default_factory=MohnParams)
    weights: np.ndarray = None
    traces: np.ndarray = None
    running_avg: np.ndarray = None
    prev_input: np.ndarray | None = None

    def __post_init__(self):
        shape = (self.n_actions, self.n_features)
        if self.weights is None:
            self.weights = np.zeros(shape)
        if self.traces is None:
            self.traces = np.zeros(shape)
        if self.running_avg is None:
            self.running_avg = np.zeros(self.n_features)

    def observe_features(self, features: np.ndarray) -> np.ndarray:
        """Center the body features and update the running average."""
        v_mi, self.running_avg = centered_input(
            features, self.running_avg, self.params.running_avg_alpha
        )
        return v_mi

    def center_only(self, features: np.ndarray) -> np.ndarray:
        """Center without touching the running average (for replayed batches)."""
        return np.asarray(features, dtype=float) - self.running_avg

    def output(self, v_mi: np.ndarray) -> np.ndarray:
        return mohn_output(self.weights, v_mi)

    def step_update(self, v_mi: np.ndarray, action: int, reward: float) -> None:
        """Trace and weight update after executing an action.

        v_mi is the centered input of the step the action was taken on.
        The configured pre/post choices select what enters the Hebbian
        products; on the first step of an episode in "previous" mode there
        is no presynaptic history and the traces only decay.
        """
        p = self.params
        pre = v_mi if p.pre_synaptic == "current" else self.prev_input
        if p.post_synaptic == "executed":
            post = one_hot(action, self.n_actions)
        else:
            post = self.output(v_mi)
        if pre is None:
            theta = np.zeros_like(self.traces)
        else:
            theta = hebbian_terms(pre, post, p.theta_pct)
        self.traces = update_traces(self.traces, theta, p.tau_e)
        self.weights = modulate_weights(self.weights, self.traces, reward, p.baseline)
        self.prev_input = np.array(v_mi, dtype=float)

    def reset_traces(self) -> None:
        self.traces = np.zeros_like(self.traces)
        self.prev_input = None
