# Copyright 2026 The lsviucb Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import logging

import numpy as np
import pretend
import pytest

from lsviucb.agent import EpsGreedyAgent, LsviUcbAgent, RandomAgent
from lsviucb.errors import ConfigError, DomainError, OutputError
from lsviucb.harness import runner
from lsviucb.harness._csv import read_aggregated_csv, read_regret_csv
from lsviucb.harness.config import load_config
from lsviucb.mdp import RegretLog


def _config(out, **overrides):
    values = {"env.family": "tabular", "episodes": 10, "seeds": "0", "out": str(out)}
    values.update(overrides)
    return load_config(None, values)


def _runs(*curves):
    return [pretend.stub(log=RegretLog(v_star=1.0, per_episode_reward=curve)) for curve in curves]


class TestBuild:
    def test_environment_depends_only_on_seed(self, tmp_path):
        config = _config(tmp_path)
        first = runner.build_environment(config, 3)
        second = runner.build_environment(config, 3)
        np.testing.assert_array_equal(first.transitions, second.transitions)
        assert not np.array_equal(first.transitions, runner.build_environment(config, 4).transitions)

    def test_agents(self, tmp_path):
        config = _config(tmp_path, **{"agent.epsilon": "0.2", "agent.ball_radius": "auto"})
        env = runner.build_environment(config, 0)
        assert isinstance(runner.build_agent(config, "random", env), RandomAgent)

        greedy = runner.build_agent(config, "eps_greedy", env)
        assert isinstance(greedy, EpsGreedyAgent)
        assert greedy.epsilon == 0.2
        assert greedy.ball_radius == pytest.approx(env.feature_dim**0.5)

        agent = runner.build_agent(config, "lsvi_ucb", env)
        assert type(agent) is LsviUcbAgent
        assert agent.gamma == agent.bonus_cap > 0

    def test_unknown_agent(self, tmp_path):
        config = _config(tmp_path)
        with pytest.raises(ConfigError, match="unknown agent 'oracle'"):
            runner.build_agent(config, "oracle", runner.build_environment(config, 0))

    def test_cap_below_gamma(self, tmp_path):
        config = _config(tmp_path, **{"agent.bonus_cap": "0.01"})
        with pytest.raises(ConfigError, match="exceeds the bonus cap"):
            runner.build_agent(config, "lsvi_ucb", runner.build_environment(config, 0))


class TestAggregate:
    def test_mean_and_population_std(self):
        table = runner.aggregate({"a": _runs((1.0, 0.0), (0.0, 0.0))})
        np.testing.assert_array_equal(table.episodes, [1, 2])
        mean, std = table.series["a"]
        np.testing.assert_allclose(mean, [0.5, 1.5])
        np.testing.assert_allclose(std, [0.5, 0.5])

    def test_needs_v_star(self):
        runs = [pretend.stub(log=RegretLog(v_star=None, per_episode_reward=(0.5,)))]
        with pytest.raises(DomainError, match="needs V"):
            runner.aggregate({"a": runs})

    def test_lengths_must_match(self):
        with pytest.raises(DomainError, match="different lengths"):
            runner.aggregate({"a": _runs((1.0,), (1.0, 1.0))})

    def test_empty(self):
        with pytest.raises(DomainError, match="nothing to aggregate"):
            runner.aggregate({})


class TestRunExperiment:
    def test_outputs(self, tmp_path):
        config = _config(tmp_path / "out", baselines="random")
        outcome = runner.run_experiment(config)

        out = tmp_path / "out"
        for name in (
            "lsvi_ucb-seed0.csv",
            "random-seed0.csv",
            "artifacts-seed0.npz",
            runner.AGGREGATED_CSV,
            runner.METADATA_JSON,
            runner.DIAGNOSTICS_JSON,
        ):
            assert (out / name).is_file()

        assert len(read_regret_csv(out / "lsvi_ucb-seed0.csv").rewards) == 10
        assert set(outcome.comparison()) == {"lsvi_ucb", "random"}
        assert outcome.report.skipped == ["closure: only defined on the counterexample"]

        metadata = runner.load_metadata(out)
        assert metadata.config == config
        assert [(run.agent, run.seed) for run in metadata.runs] == [("lsvi_ucb", 0), ("random", 0)]
        assert [run.gamma_scale for run in metadata.runs] == [config.agent.gamma_scale, None]

    def test_aggregated_matches_seeds(self, tmp_path):
        out = tmp_path / "out"
        runner.run_experiment(_config(out, seeds="0..2"))
        curves = [read_regret_csv(out / f"lsvi_ucb-seed{seed}.csv").cumulative_regret for seed in range(3)]
        mean, std = read_aggregated_csv(out / runner.AGGREGATED_CSV).series["lsvi_ucb"]
        np.testing.assert_allclose(mean, np.mean(curves, axis=0), atol=1e-12, rtol=0)
        np.testing.assert_allclose(std, np.std(curves, axis=0), atol=1e-12, rtol=0)

    def test_reproducible(self, tmp_path):
        for name in ("a", "b"):
            runner.run_experiment(_config(tmp_path / name, seeds="0,1"))
        for name in ("lsvi_ucb-seed0.csv", "lsvi_ucb-seed1.csv", runner.AGGREGATED_CSV):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_parallel_matches_serial(self, tmp_path):
        runner.run_experiment(_config(tmp_path / "serial", seeds="0,1", baselines="random"))
        runner.run_experiment(_config(tmp_path / "parallel", seeds="0,1", baselines="random", workers="2"))
        for name in ("lsvi_ucb-seed1.csv", "random-seed0.csv", runner.AGGREGATED_CSV):
            assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()

    def test_counterexample_closure(self, tmp_path):
        outcome = runner.run_experiment(_config(tmp_path / "out", **{"env.family": "counterexample"}))
        assert outcome.report.closure_max_residual <= 1e-9
        assert outcome.report.skipped == []

    def test_unwritable_output_fails_before_running(self, tmp_path, monkeypatch):
        blocker = tmp_path / "file"
        blocker.write_text("")
        task = pretend.call_recorder(lambda task: None)
        monkeypatch.setattr(runner, "_run_task", task)
        with pytest.raises(OutputError, match="unable to create the output directory"):
            runner.run_experiment(_config(blocker / "out"))
        assert task.calls == []

    def test_needs_output_directory(self):
        with pytest.raises(ConfigError, match="no output directory"):
            runner.run_experiment(load_config(None, {"episodes": 1}))


class TestCompareBaselines:
    def test_needs_baselines(self, tmp_path):
        with pytest.raises(ConfigError, match="at least one baseline"):
            runner.compare_baselines(_config(tmp_path))

    def test_comparison(self, tmp_path):
        comparison = runner.compare_baselines(_config(tmp_path, baselines="random, eps_greedy"))
        assert list(comparison) == ["lsvi_ucb", "random", "eps_greedy"]
        assert all(std == 0.0 for _, std in comparison.values())

    def test_comparison_writes_run_outputs(self, tmp_path):
        out = tmp_path / "out"
        runner.compare_baselines(_config(out, baselines="random"))
        assert (out / "random-seed0.csv").is_file()
        assert (out / runner.METADATA_JSON).is_file()

    def test_render(self):
        table = runner.render_comparison({"lsvi_ucb": (1.0, 0.5), "random": (3.0, 0.25)}, title="regret")
        assert table.title == "regret"
        assert table.row_count == 2


class TestLogLogSlope:
    def test_power_law(self):
        episodes = np.arange(1, 2001)
        assert runner.loglog_slope(episodes, 3.0 * episodes**0.5) == pytest.approx(0.5)

    def test_ignores_nonpositive_regret(self):
        episodes = np.arange(1, 2001)
        regret = episodes.astype(float)
        regret[600:700] = 0.0
        assert runner.loglog_slope(episodes, regret) == pytest.approx(1.0)

    def test_window(self):
        with pytest.raises(DomainError, match="fewer than two"):
            runner.loglog_slope(np.arange(1, 100), np.ones(99))


class TestDiagnoseRun:
    def test_rederives_report(self, tmp_path, caplog):
        outcome = runner.run_experiment(_config(tmp_path / "out", seeds="0,1"))
        with caplog.at_level(logging.WARNING):
            report = runner.diagnose_run(tmp_path / "out")
        assert report == outcome.report
        assert "differs" not in caplog.text

    def test_warns_on_tampered_report(self, tmp_path, caplog):
        runner.run_experiment(_config(tmp_path / "out"))
        (tmp_path / "out" / runner.DIAGNOSTICS_JSON).write_text("{}")
        with caplog.at_level(logging.WARNING):
            runner.diagnose_run(tmp_path / "out")
        assert "differs from the report derived from the artifacts" in caplog.text

    def test_missing_metadata(self, tmp_path):
        with pytest.raises(ConfigError, match="unable to read"):
            runner.diagnose_run(tmp_path)

    def test_malformed_metadata(self, tmp_path):
        (tmp_path / runner.METADATA_JSON).write_text('{"version": 1}')
        with pytest.raises(ConfigError, match="malformed"):
            runner.diagnose_run(tmp_path)

    def test_missing_artifacts(self, tmp_path):
        runner.run_experiment(_config(tmp_path / "out"))
        (tmp_path / "out" / "artifacts-seed0.npz").unlink()
        with pytest.raises(ConfigError, match="artifacts-seed0.npz"):
            runner.diagnose_run(tmp_path / "out")
