"""Experiment driver: seed matrices, CSV logging, curve aggregation, oracles.

Per-seed CSVs hold one row per episode; aggregates hold the trailing-100
mean reward averaged across seeds with the across-seed standard deviation.
Floats are serialized with 17 significant digits so files round-trip
exactly and reruns are byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import multiprocessing
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agent import MohqaAgent, RunResult, train
from .config import ExperimentConfig, load_config
from .ctgraph import (
    CTGraphConfig,
    CTGraphEnv,
    estimate_random_policy_success,
    random_policy_success_prob,
)
from .errors import ConfigError
from .rng import mix_seed

__all__ = [
    "ExperimentSpec",
    "CurvePoint",
    "run_single",
    "run_experiment",
    "aggregate_runs",
    "write_run_csv",
    "read_run_csv",
    "oracle_report",
    "merge_plotdata",
    "SMOOTHING_WINDOW",
]

log = logging.getLogger("mohqa")

SMOOTHING_WINDOW = 100


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class ExperimentSpec:
    config_path: str
    out_dir: str
    agent_kinds: tuple[str, ...] = ("dqn", "mohqa")
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4, 5)
    jobs: int = 1

    def __post_init__(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


@dataclass(frozen=True)
class CurvePoint:
    episode: int
    mean: float  # trailing-window mean reward, averaged across seeds
    std: float  # std of the per-seed trailing means


def make_run_env(env_cfg: CTGraphConfig, run_seed: int) -> CTGraphEnv:
    """Environment instance for one run; mixes the run seed into env_seed
    so each simulation sees an independently seeded graph."""
    per_run = dataclasses.replace(env_cfg, env_seed=mix_seed(env_cfg.env_seed, run_seed))
    return CTGraphEnv(per_run)


def run_single(
    config: ExperimentConfig, agent_kind: str, seed: int, stop_fn=None
) -> RunResult:
    """Train one (agent kind, seed) pair to completion."""
    env = make_run_env(config.env, seed)
    mohn_cfg = config.mohn if agent_kind == "mohqa" else None
    agent = MohqaAgent(config.env.n_actions, config.agent, mohn_cfg, seed)
    log.info("run start: agent=%s seed=%d episodes=%d", agent_kind, seed, config.run.episodes)
    result = train(config, env, agent, agent_kind=agent_kind, seed=seed, stop_fn=stop_fn)
    log.info("run done: agent=%s seed=%d", agent_kind, seed)
    return result


def write_run_csv(path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "reward", "length", "epsilon"])
        for rec in result.records:
            writer.writerow([rec.episode, _fmt(rec.reward), rec.length, _fmt(rec.epsilon)])


def read_run_csv(path) -> np.ndarray:
    """Episode rewards from a per-seed CSV."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return np.array([float(row["reward"]) for row in reader])


def trailing_mean(rewards: np.ndarray, window: int = SMOOTHING_WINDOW) -> np.ndarray:
    """Mean over the last `window` episodes at each episode (shorter at the start)."""
    csum = np.concatenate([[0.0], np.cumsum(rewards)])
    n = len(rewards)
    idx = np.arange(n)
    lo = np.maximum(idx - window + 1, 0)
    return (csum[idx + 1] - csum[lo]) / (idx + 1 - lo)


def aggregate_runs(per_seed_rewards: list[np.ndarray], window: int = SMOOTHING_WINDOW) -> list[CurvePoint]:
    n = min(len(r) for r in per_seed_rewards)
    smoothed = np.stack([trailing_mean(r[:n], window) for r in per_seed_rewards])
    means = smoothed.mean(axis=0)
    stds = smoothed.std(axis=0)
    return [CurvePoint(i, float(means[i]), float(stds[i])) for i in range(n)]


def write_aggregate_csv(path, points: list[CurvePoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "mean_reward_w100", "std_across_seeds"])
        for pt in points:
            writer.writerow([pt.episode, _fmt(pt.mean), _fmt(pt.std)])


def _run_job(args) -> str:
    config, agent_kind, seed, out_dir = args
    result = run_single(config, agent_kind, seed)
    path = Path(out_dir) / f"{agent_kind}_seed{seed}.csv"
    write_run_csv(path, result)
    return str(path)


def run_experiment(spec: ExperimentSpec) -> dict[str, list[str]]:
    """Run the full (agent kind x seed) matrix and write all CSVs.

    Returns {agent_kind: [per-seed csv paths]}. The aggregate CSVs are
    recomputed from the per-seed files so aggregation stays a pure
    function of what is on disk.
    """
    config = load_config(spec.config_path)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise OSError(f"output directory not writable: {out_dir}")

    jobs = [(config, kind, seed, str(out_dir)) for kind in spec.agent_kinds for seed in spec.seeds]
    if spec.jobs > 1:
        with multiprocessing.Pool(spec.jobs) as pool:
            paths = pool.map(_run_job, jobs)
    else:
        paths = [_run_job(job) for job in jobs]

    by_kind: dict[str, list[str]] = {}
    for (cfg, kind, seed, _), path in zip(jobs, paths):
        by_kind.setdefault(kind, []).append(path)
    for kind, kind_paths in by_kind.items():
        rewards = [read_run_csv(p) for p in kind_paths]
        write_aggregate_csv(out_dir / f"{kind}_aggregate.csv", aggregate_runs(rewards))
    return by_kind


def oracle_report(env_cfg: CTGraphConfig, mc_episodes: int | None = None, mc_seed: int = 0) -> str:
    """Analytic random-policy success probability plus a Monte-Carlo cross-check."""
    p = random_policy_success_prob(env_cfg)
    if mc_episodes is None:
        mc_episodes = min(int(math.ceil(20.0 / p)), 100_000)
    estimate = estimate_random_policy_success(env_cfg, mc_episodes, seed=mc_seed)
    sigma = math.sqrt(p * (1.0 - p) / mc_episodes)
    lines = [
        f"random_policy_success_prob = {p:.6e}",
        f"episodes_per_reward        = {1.0 / p:.6e}",
        f"monte_carlo_estimate       = {estimate:.6e}  ({mc_episodes} episodes)",
        f"3-sigma interval           = [{max(p - 3 * sigma, 0.0):.6e}, {p + 3 * sigma:.6e}]",
        f"within_3_sigma             = {abs(estimate - p) <= 3 * sigma}",
    ]
    return "\n".join(lines)


def merge_plotdata(in_dir, out_path) -> int:
    """Merge all *_aggregate.csv files into one long-format CSV.

    Returns the number of data rows written. Missing inputs are an error
    and produce no output file.
    """
    in_dir = Path(in_dir)
    agg_paths = sorted(in_dir.glob("*_aggregate.csv"))
    if not agg_paths:
        raise FileNotFoundError(f"no *_aggregate.csv files in {in_dir}")
    rows = []
    for path in agg_paths:
        agent = path.name[: -len("_aggregate.csv")]
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                rows.append((agent, row["episode"], row["mean_reward_w100"], row["std_across_seeds"]))
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "episode", "mean", "std"])
        writer.writerows(rows)
    return len(rows)
