"""Experiment configuration: dataclasses plus INI-file ingestion.

A config file has sections [env], [agent], [mohn] and [run]; every key is
optional and falls back to the defaults below. Unknown keys are rejected
so typos fail loudly.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass, field, fields

from .ctgraph import SEEDED_LEAF, CTGraphConfig, ObsMode
from .errors import ConfigError

__all__ = ["AgentConfig", "MohnConfig", "RunConfig", "ExperimentConfig", "load_config", "config_hash"]


@dataclass(frozen=True)
class AgentConfig:
    lr: float = 1e-4
    gamma: float = 0.99
    replay_capacity: int = 50_000
    batch_size: int = 32
    learn_every: int = 4
    target_sync: int = 1_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 50_000

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.lr <= 0.0:
            raise ConfigError("lr must be positive")
        for name in ("replay_capacity", "batch_size", "learn_every", "target_sync", "eps_decay_steps"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")


@dataclass(frozen=True)
class MohnConfig:
    theta_pct: float = 5.0
    tau_e: float = 20.0
    baseline: float = -0.01
    running_avg_alpha: float = 0.05
    post_synaptic: str = "executed"
    pre_synaptic: str = "current"


@dataclass(frozen=True)
class RunConfig:
    episodes: int = 10_000
    max_steps_per_episode: int = 200
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4, 5)
    agent_kind: tuple[str, ...] = ("dqn", "mohqa")

    def __post_init__(self):
        if self.episodes < 1 or self.max_steps_per_episode < 1:
            raise ConfigError("episodes and max_steps_per_episode must be >= 1")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        for kind in self.agent_kind:
            if kind not in ("dqn", "mohqa"):
                raise ConfigError(f"agent_kind must be 'dqn' or 'mohqa', got {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    env: CTGraphConfig = field(default_factory=CTGraphConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    mohn: MohnConfig = field(default_factory=MohnConfig)
    run: RunConfig = field(default_factory=RunConfig)


def _parse_env(items: dict) -> CTGraphConfig:
    kwargs = {}
    converters = {
        "branch_factor": int,
        "depth": int,
        "delay_prob": float,
        "wait_obs_set_size": int,
        "obs_mode": lambda v: ObsMode(v.strip().lower()),
        "reward_leaf": lambda v: v if v.strip().lower() == SEEDED_LEAF else int(v),
        "env_seed": int,
    }
    for key, raw in items.items():
        if key not in converters:
            raise ConfigError(f"unknown [env] key: {key}")
        try:
            kwargs[key] = converters[key](raw)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"bad [env] value for {key}: {raw!r}") from exc
    return CTGraphConfig(**kwargs)


def _parse_section(cls, section: str, items: dict):
    spec = {f.name: f.type for f in fields(cls)}
    kwargs = {}
    for key, raw in items.items():
        if key not in spec:
            raise ConfigError(f"unknown [{section}] key: {key}")
        try:
            if key in ("seeds",):
                kwargs[key] = tuple(int(v) for v in raw.replace(",", " ").split())
            elif key in ("agent_kind",):
                kwargs[key] = tuple(v.strip() for v in raw.replace(",", " ").split())
            elif key in ("post_synaptic", "pre_synaptic"):
                kwargs[key] = raw.strip().lower()
            elif spec[key] in ("int", int):
                kwargs[key] = int(raw)
            else:
                kwargs[key] = float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad [{section}] value for {key}: {raw!r}") from exc
    return cls(**kwargs)


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    known = {"env", "agent", "mohn", "run"}
    extra = set(parser.sections()) - known
    if extra:
        raise ConfigError(f"unknown config sections: {sorted(extra)}")
    return ExperimentConfig(
        env=_parse_env(dict(parser.items("env")) if parser.has_section("env") else {}),
        agent=_parse_section(AgentConfig, "agent", dict(parser.items("agent")) if parser.has_section("agent") else {}),
        mohn=_parse_section(MohnConfig, "mohn", dict(parser.items("mohn")) if parser.has_section("mohn") else {}),
        run=_parse_section(RunConfig, "run", dict(parser.items("run")) if parser.has_section("run") else {}),
    )


def config_hash(config: ExperimentConfig) -> str:
    """Stable short digest of the full configuration."""
    blob = repr(dataclasses.asdict(config)).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
