import numpy as np
import pytest

from mohqa.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from mohqa.errors import ConfigError
from mohqa.harness import (
    SMOOTHING_WINDOW,
    CurvePoint,
    ExperimentSpec,
    aggregate_runs,
    merge_plotdata,
    oracle_report,
    read_run_csv,
    run_experiment,
    run_single,
    trailing_mean,
    write_run_csv,
)

TINY = """
[env]
branch_factor = 2
depth = 1
delay_prob = 0.0
obs_mode = unique
env_seed = 1

[agent]
replay_capacity = 200
batch_size = 4
eps_decay_steps = 100

[run]
episodes = 12
max_steps_per_episode = 10
seeds = 0 1
agent_kind = dqn mohqa
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY)
    return path


class TestTrailingMean:
    def test_matches_naive_windowed_mean(self):
        rng = np.random.default_rng(0)
        rewards = rng.integers(0, 2, size=500).astype(float)
        got = trailing_mean(rewards, window=100)
        for i in (0, 1, 50, 99, 100, 250, 499):
            lo = max(i - 99, 0)
            assert got[i] == pytest.approx(rewards[lo : i + 1].mean())

    def test_constant_series(self):
        np.testing.assert_allclose(trailing_mean(np.ones(300)), np.ones(300))

    def test_default_window_is_100(self):
        assert SMOOTHING_WINDOW == 100


class TestAggregate:
    def test_mean_and_std_across_seeds(self):
        a = np.zeros(10)
        b = np.ones(10)
        points = aggregate_runs([a, b], window=100)
        assert len(points) == 10
        for pt in points:
            assert pt.mean == pytest.approx(0.5)
            assert pt.std == pytest.approx(0.5)

    def test_truncates_to_shortest_run(self):
        points = aggregate_runs([np.ones(5), np.ones(9)], window=3)
        assert len(points) == 5


class TestCsvRoundtrip:
    def test_rewards_roundtrip_exactly(self, tmp_path, tiny_config):
        from mohqa.config import load_config

        result = run_single(load_config(tiny_config), "dqn", seed=0)
        path = tmp_path / "run.csv"
        write_run_csv(path, result)
        got = read_run_csv(path)
        np.testing.assert_array_equal(got, [r.reward for r in result.records])
        header = path.read_text().splitlines()[0]
        assert header == "episode,reward,length,epsilon"


class TestRunExperiment:
    def test_matrix_outputs_and_byte_identical_rerun(self, tmp_path, tiny_config):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        spec_a = ExperimentSpec(str(tiny_config), str(out_a), ("dqn", "mohqa"), (0, 1))
        spec_b = ExperimentSpec(str(tiny_config), str(out_b), ("dqn", "mohqa"), (0, 1))
        by_kind = run_experiment(spec_a)
        run_experiment(spec_b)
        assert sorted(by_kind) == ["dqn", "mohqa"]
        names = sorted(p.name for p in out_a.iterdir())
        assert names == [
            "dqn_aggregate.csv",
            "dqn_seed0.csv",
            "dqn_seed1.csv",
            "mohqa_aggregate.csv",
            "mohqa_seed0.csv",
            "mohqa_seed1.csv",
        ]
        for name in names:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_aggregate_recomputable_from_per_seed_files(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        run_experiment(ExperimentSpec(str(tiny_config), str(out), ("dqn",), (0, 1)))
        rewards = [read_run_csv(out / f"dqn_seed{s}.csv") for s in (0, 1)]
        points = aggregate_runs(rewards)
        lines = (out / "dqn_aggregate.csv").read_text().splitlines()
        assert lines[0] == "episode,mean_reward_w100,std_across_seeds"
        assert len(lines) == 1 + len(points)
        first = lines[1].split(",")
        assert float(first[1]) == pytest.approx(points[0].mean)

    def test_duplicate_seeds_rejected(self, tiny_config, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentSpec(str(tiny_config), str(tmp_path), seeds=(0, 0))


class TestPlotdata:
    def test_merges_all_aggregates(self, tmp_path):
        from mohqa.harness import write_aggregate_csv

        write_aggregate_csv(tmp_path / "dqn_aggregate.csv", [CurvePoint(0, 0.25, 0.1)])
        write_aggregate_csv(tmp_path / "mohqa_aggregate.csv", [CurvePoint(0, 0.75, 0.2)])
        out = tmp_path / "plot.csv"
        rows = merge_plotdata(tmp_path, out)
        assert rows == 2
        lines = out.read_text().splitlines()
        assert lines[0] == "agent,episode,mean,std"
        assert lines[1].startswith("dqn,0,0.25")
        assert lines[2].startswith("mohqa,0,0.75")

    def test_empty_dir_is_an_error(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            merge_plotdata(tmp_path, tmp_path / "plot.csv")
        assert not (tmp_path / "plot.csv").exists()


class TestOracleReport:
    def test_report_contents(self):
        from mohqa.ctgraph import CTGraphConfig

        report = oracle_report(
            CTGraphConfig(branch_factor=2, depth=1, delay_prob=0.0), mc_episodes=2000
        )
        assert "3.703704e-02" in report  # 1/27
        assert "within_3_sigma             = True" in report


class TestCli:
    def test_run_and_plotdata_exit_zero(self, tmp_path, tiny_config, capsys):
        out = tmp_path / "results"
        assert main(["run", "--config", str(tiny_config), "--out", str(out)]) == EXIT_OK
        assert (out / "mohqa_aggregate.csv").exists()
        plot = tmp_path / "plot.csv"
        assert main(["plotdata", "--in", str(out), "--out", str(plot)]) == EXIT_OK
        assert "wrote" in capsys.readouterr().out

    def test_oracle_exit_zero(self, tiny_config, capsys):
        assert main(["oracle", "--config", str(tiny_config), "--mc-episodes", "500"]) == EXIT_OK
        assert "random_policy_success_prob" in capsys.readouterr().out

    def test_bad_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[env]\ndelay_prob = 1.0\n")
        assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err

    def test_missing_config_exits_2(self, tmp_path):
        assert (
            main(["oracle", "--config", str(tmp_path / "nope.ini")]) == EXIT_CONFIG
        )

    def test_runtime_failure_exits_3(self, tmp_path, capsys):
        assert main(["plotdata", "--in", str(tmp_path), "--out", str(tmp_path / "p.csv")]) == EXIT_RUNTIME
        assert "runtime error" in capsys.readouterr().err
