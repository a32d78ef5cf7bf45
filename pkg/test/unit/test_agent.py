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

import math

import numpy as np
import pretend
import pytest
from pydantic import ValidationError

from lsviucb.agent import (
    EpsGreedyAgent,
    GammaParams,
    LsviUcbAgent,
    OptimisticQ,
    RandomAgent,
    RunArtifacts,
    compute_gamma,
    default_bonus_cap,
    optimistic_q_eval,
    resolve_gamma,
    run_episodes,
    run_lsvi_ucb,
)
from lsviucb.environments import TabularMdp
from lsviucb.errors import ConfigError, DomainError
from lsviucb.links import IDENTITY, LOGISTIC, rescale_into_range
from lsviucb.mdp import StepRecord, Trajectory, rollout_episode
from lsviucb.regression import CovarianceState, fit_constrained_glm, squared_loss


def _params(**overrides):
    base = dict(
        scale=1.0, bonus_cap=1.0, feature_dim=1, episodes=1, horizon=1, kappa=1.0, big_k=1.0, big_m=1.0
    )
    base.update(overrides)
    return GammaParams(**base)


def _agent(env, **kwargs):
    kwargs.setdefault("link", IDENTITY)
    kwargs.setdefault("gamma", 0.0)
    kwargs.setdefault("ball_radius", math.sqrt(env.feature_dim))
    return LsviUcbAgent.for_env(env, **kwargs)


def _single_action_env():
    return TabularMdp(np.ones((2, 1, 1, 1)), np.full((2, 1, 1), 0.25), np.ones(1))


def _two_step_env():
    # One state, two actions, deterministic rewards per step.
    rewards = np.array([[[0.1, 0.2]], [[0.3, 0.4]]])
    return TabularMdp(np.ones((2, 1, 2, 1)), rewards, np.ones(1))


class TestGamma:
    def test_formula(self):
        assert compute_gamma(_params()) == pytest.approx(math.sqrt(3 + math.log(3)))
        assert compute_gamma(_params()) == pytest.approx(2.0245, abs=1e-4)

    def test_increases_with_episodes(self):
        assert compute_gamma(_params(episodes=2)) > compute_gamma(_params(episodes=1))

    def test_zero_scale(self):
        assert compute_gamma(_params(scale=0.0)) == 0.0

    def test_unset_cap_counts_as_one(self):
        assert compute_gamma(_params(bonus_cap=None)) == compute_gamma(_params(bonus_cap=1.0))

    def test_for_link(self):
        params = GammaParams.for_link(LOGISTIC, scale=1.0, feature_dim=2, episodes=10, horizon=3)
        assert (params.kappa, params.big_k, params.big_m) == (LOGISTIC.kappa, LOGISTIC.big_k, LOGISTIC.big_m)
        assert params.bonus_cap is None

    def test_rejects_negative_scale(self):
        with pytest.raises(ValidationError):
            _params(scale=-1.0)

    def test_resolve_default(self):
        gamma, cap = resolve_gamma(_params(bonus_cap=None))
        assert gamma == cap == default_bonus_cap(_params(bonus_cap=None))

    def test_resolve_explicit(self):
        gamma, cap = resolve_gamma(_params(bonus_cap=10.0))
        assert gamma == compute_gamma(_params(bonus_cap=10.0))
        assert cap == 10.0

    def test_resolve_rejects_small_cap(self):
        with pytest.raises(ConfigError, match="exceeds the bonus cap"):
            resolve_gamma(_params(bonus_cap=0.5))


class TestOptimisticQ:
    def test_zero(self):
        q = OptimisticQ(np.zeros(2), 0.0, CovarianceState.identity(2), IDENTITY)
        assert optimistic_q_eval(q, np.array([0.6, 0.8])) == 0.0

    def test_clipped_above(self):
        q = OptimisticQ(np.zeros(2), 10.0, CovarianceState.identity(2), IDENTITY)
        assert optimistic_q_eval(q, np.array([0.6, 0.8])) == 1.0

    def test_clipped_below(self):
        q = OptimisticQ(np.array([-1.0, 0.0]), 0.0, CovarianceState.identity(2), IDENTITY)
        assert optimistic_q_eval(q, np.array([1.0, 0.0])) == 0.0

    def test_bonus(self):
        lam = np.diag([4.0, 1.0])
        q = OptimisticQ(np.array([0.3, 0.0]), 1.0, CovarianceState(lam, np.linalg.inv(lam)), IDENTITY)
        assert optimistic_q_eval(q, np.array([1.0, 0.0])) == pytest.approx(0.8)

    def test_rejects_long_features(self):
        q = OptimisticQ(np.zeros(2), 0.0, CovarianceState.identity(2), IDENTITY)
        with pytest.raises(DomainError, match="exceeds 1"):
            optimistic_q_eval(q, np.array([1.0, 1.0]))

    @pytest.mark.parametrize(("link", "target"), [(LOGISTIC, 0.9), (IDENTITY, 1.5)])
    def test_reproduces_fitted_prediction_beyond_unit_ball(self, link, target):
        X = np.array([[1.0, 0.0]])
        fit = fit_constrained_glm(X, np.array([target]), link, radius=2.0)
        q = OptimisticQ(fit.params.theta, 0.0, CovarianceState.identity(2), link)
        assert fit.objective == pytest.approx((target - q.value(X[0])) ** 2, abs=1e-12)

    def test_fit_saturates_at_link_range(self):
        X = np.array([[1.0, 0.0]])
        fit = fit_constrained_glm(X, np.array([0.9]), LOGISTIC, radius=2.0)
        q = OptimisticQ(fit.params.theta, 0.0, CovarianceState.identity(2), LOGISTIC)
        assert q.value(X[0]) == pytest.approx(LOGISTIC.range()[1], abs=1e-6)


class TestRealizability:
    @pytest.mark.parametrize("link", [IDENTITY, LOGISTIC])
    def test_optimal_values_are_representable(self, tabular_env, link):
        qstar = tabular_env.exact_oracle().q
        S, A = tabular_env.num_states, tabular_env.num_actions
        targets = qstar if link is IDENTITY else rescale_into_range(link, qstar)
        for h in range(tabular_env.horizon):
            theta = link.inverse(targets[h].reshape(-1)) if link.inverse else targets[h].reshape(-1)
            assert np.abs(theta).max() <= 1.0
            assert np.linalg.norm(theta) <= math.sqrt(S * A)
            q = OptimisticQ(theta, 0.0, CovarianceState.identity(S * A), link)
            np.testing.assert_allclose(q.values(tabular_env.feature_table), targets[h], atol=1e-12)


class TestLsviUcbAgent:
    def test_rejects_negative_gamma(self, tabular_env):
        with pytest.raises(ConfigError, match="nonnegative"):
            _agent(tabular_env, gamma=-1.0)

    def test_rejects_gamma_above_cap(self, tabular_env):
        with pytest.raises(ConfigError, match="exceeds the bonus cap"):
            _agent(tabular_env, gamma=2.0, bonus_cap=1.0)

    def test_rejects_refit_period(self, tabular_env):
        with pytest.raises(ConfigError, match="refit_every"):
            _agent(tabular_env, refit_every=0)

    def test_initial_estimates(self, tabular_env):
        agent = _agent(tabular_env)
        for h in range(tabular_env.horizon):
            assert agent.q_function(h) is None
            for s in range(tabular_env.num_states):
                np.testing.assert_array_equal(agent.action_values(h, s), [1.0, 1.0])
                assert agent.greedy_action(h, s) == 0

    def test_strict_argmax(self, tabular_env, monkeypatch):
        agent = _agent(tabular_env)
        monkeypatch.setattr(agent, "action_values", pretend.call_recorder(lambda h, s: np.array([0.2, 0.7])))
        assert agent.greedy_action(0, 0) == 1
        assert agent.action_values.calls == [pretend.call(0, 0)]

    def test_last_step_fits_rewards(self, tabular_env, rng):
        agent = _agent(tabular_env)
        trajectory = rollout_episode(tabular_env, agent.policy(rng), rng)
        assert agent.observe(trajectory)

        last = trajectory.steps[-1]
        expected = np.zeros(tabular_env.feature_dim)
        expected[last.state * tabular_env.num_actions + last.action] = last.reward
        np.testing.assert_allclose(agent.q_function(tabular_env.horizon - 1).theta, expected, atol=1e-12)

    def test_earlier_step_targets_use_refit_successor(self):
        agent = _agent(_two_step_env())
        assert agent.observe(Trajectory(steps=(StepRecord(0, 0, 0.1), StepRecord(0, 1, 0.4))))

        np.testing.assert_allclose(agent.q_function(1).theta, [0.0, 0.4], atol=1e-12)
        # 0.1 plus the best refit estimate at the next step, not the initial 1.
        np.testing.assert_allclose(agent._targets(0), [0.5], atol=1e-12)
        np.testing.assert_allclose(agent.q_function(0).theta, [0.5, 0.0], atol=1e-12)

    def test_targets_follow_successor_across_episodes(self):
        agent = _agent(_two_step_env())
        agent.observe(Trajectory(steps=(StepRecord(0, 0, 0.1), StepRecord(0, 0, 0.3))))
        np.testing.assert_allclose(agent._targets(0), [0.4], atol=1e-12)

        agent.observe(Trajectory(steps=(StepRecord(0, 1, 0.2), StepRecord(0, 1, 0.4))))
        np.testing.assert_allclose(agent.q_function(1).theta, [0.3, 0.4], atol=1e-12)
        np.testing.assert_allclose(agent._targets(0), [0.5, 0.6], atol=1e-12)
        np.testing.assert_allclose(agent.q_function(0).theta, [0.5, 0.6], atol=1e-12)

    def test_logistic_estimates_match_fitted_objective(self, tabular_env, rng):
        agent = _agent(tabular_env, link=LOGISTIC)
        for _ in range(5):
            agent.observe(rollout_episode(tabular_env, agent.policy(rng), rng))
        for h in range(tabular_env.horizon):
            X, y = agent.replay_features(h), agent._targets(h)
            q = agent.q_function(h)
            residual = y - q.values(X)
            assert float(residual @ residual) == pytest.approx(squared_loss(q.theta, X, y, LOGISTIC), abs=1e-12)

    def test_incremental_covariance_matches_replay(self, tabular_env, rng):
        agent = _agent(tabular_env, gamma=0.5)
        for _ in range(20):
            agent.observe(rollout_episode(tabular_env, agent.policy(rng), rng))
        for h in range(tabular_env.horizon):
            direct = CovarianceState.from_covariates(agent.replay_features(h))
            np.testing.assert_allclose(agent.covariance(h).lam, direct.lam, atol=1e-8)
            np.testing.assert_allclose(agent.covariance(h).lam_inv, direct.lam_inv, atol=1e-8)
            assert agent.covariance(h).count == 20

    def test_estimates_stay_clipped(self, tabular_env, rng):
        agent = _agent(tabular_env, gamma=0.5)
        for _ in range(10):
            agent.observe(rollout_episode(tabular_env, agent.policy(rng), rng))
        for h in range(tabular_env.horizon):
            values = agent.q_function(h).values(tabular_env.feature_table)
            assert values.min() >= 0.0
            assert values.max() <= 1.0

    def test_refit_schedule(self, tabular_env, rng):
        agent = _agent(tabular_env, refit_every=2)
        agent.observe(rollout_episode(tabular_env, agent.policy(rng), rng))
        assert agent.q_function(0) is None
        assert agent.covariance(0).count == 1
        agent.observe(rollout_episode(tabular_env, agent.policy(rng), rng))
        assert agent.q_function(0) is not None

    def test_rejects_short_trajectory(self, tabular_env):
        with pytest.raises(DomainError, match="expected a trajectory of 3 steps"):
            _agent(tabular_env).observe(Trajectory(steps=(StepRecord(0, 0, 0.0),)))

    def test_inspect(self, tabular_env):
        agent = _agent(tabular_env)
        assert agent.inspect(0, 0, 1) == (1.0, 1.0)


class TestBaselines:
    def test_eps_greedy_rejects_epsilon(self, tabular_env):
        with pytest.raises(ConfigError, match="epsilon"):
            EpsGreedyAgent.for_env(tabular_env, link=IDENTITY, epsilon=1.5)

    def test_eps_greedy_has_no_bonus(self, tabular_env):
        agent = EpsGreedyAgent.for_env(tabular_env, link=IDENTITY, epsilon=0.0)
        assert agent.gamma == 0.0
        assert agent.name == "eps_greedy"
        assert agent.policy(np.random.default_rng(0))(0, 0) == 0

    def test_eps_greedy_explores(self, tabular_env):
        agent = EpsGreedyAgent.for_env(tabular_env, link=IDENTITY, epsilon=1.0)
        act = agent.policy(np.random.default_rng(0))
        assert {act(0, 0) for _ in range(50)} == {0, 1}

    def test_random(self):
        agent = RandomAgent(3)
        act = agent.policy(np.random.default_rng(0))
        assert {act(0, 0) for _ in range(100)} == {0, 1, 2}
        assert agent.observe(Trajectory(steps=()))
        assert all(math.isnan(v) for v in agent.inspect(0, 0, 0))


class TestRunEpisodes:
    def test_single_episode(self, tabular_env):
        result = run_episodes(tabular_env, _agent(tabular_env), 1, 0)
        assert result.log.episodes == 1
        assert result.artifacts.episodes == 1
        assert result.artifacts.features.shape == (1, 3, 6)

    def test_rejects_zero_episodes(self, tabular_env):
        with pytest.raises(ConfigError, match="at least one episode"):
            run_episodes(tabular_env, _agent(tabular_env), 0, 0)

    def test_single_action_has_no_regret(self):
        env = _single_action_env()
        result = run_episodes(env, _agent(env), 5, 0)
        np.testing.assert_allclose(result.log.cumulative_regret, np.zeros(5), atol=1e-12)

    def test_deterministic(self, tabular_env):
        first = run_episodes(tabular_env, _agent(tabular_env, gamma=0.5), 15, 3)
        second = run_episodes(tabular_env, _agent(tabular_env, gamma=0.5), 15, 3)
        assert first.log == second.log
        np.testing.assert_array_equal(first.artifacts.qbar, second.artifacts.qbar)

    def test_metadata(self, tabular_env):
        result = run_episodes(tabular_env, _agent(tabular_env, gamma=0.5), 4, 9)
        metadata = result.metadata
        assert (metadata.agent, metadata.seed, metadata.link) == ("lsvi_ucb", 9, "identity")
        assert metadata.optimism_checks == 4 * tabular_env.horizon
        assert metadata.solver_calls == 4 * tabular_env.horizon
        assert metadata.v_star == tabular_env.exact_oracle().v_star
        assert metadata.final_regret == result.log.final_regret
        assert metadata.gamma_scale is None

    def test_first_episode_is_optimistic(self, tabular_env):
        artifacts = run_episodes(tabular_env, _agent(tabular_env), 1, 0).artifacts
        np.testing.assert_array_equal(artifacts.qbar, np.ones((1, 3)))
        assert np.all(artifacts.qstar <= 1.0)

    def test_optimism_with_theoretical_width(self, tabular_env):
        params = GammaParams.for_link(
            IDENTITY, scale=1.0, feature_dim=tabular_env.feature_dim, episodes=100, horizon=tabular_env.horizon
        )
        gamma, cap = resolve_gamma(params)
        agent = _agent(tabular_env, gamma=gamma, bonus_cap=cap)
        metadata = run_episodes(tabular_env, agent, 100, 0).metadata
        assert metadata.optimism_violations <= 0.01 * metadata.optimism_checks

    def test_artifacts_round_trip(self, tabular_env, tmp_path):
        artifacts = run_episodes(tabular_env, _agent(tabular_env, gamma=0.5), 3, 0).artifacts
        path = tmp_path / "artifacts.npz"
        artifacts.save(path)
        loaded = RunArtifacts.load(path)
        assert loaded.gamma == artifacts.gamma
        assert loaded.v_star == artifacts.v_star
        np.testing.assert_array_equal(loaded.squared_norms, artifacts.squared_norms)
        np.testing.assert_array_equal(loaded.solver_converged, artifacts.solver_converged)


class TestRunLsviUcb:
    def test_run(self, chain_env):
        params = GammaParams.for_link(
            IDENTITY, scale=0.02, feature_dim=chain_env.feature_dim, episodes=5, horizon=chain_env.horizon
        )
        log, metadata = run_lsvi_ucb(chain_env, 5, IDENTITY, params, ball_radius=math.sqrt(chain_env.feature_dim))
        assert log.episodes == 5
        assert metadata.v_star == 1.0
        assert metadata.bonus_cap == metadata.gamma
        assert metadata.gamma_scale == 0.02

    def test_rejects_mismatched_params(self, chain_env):
        params = GammaParams.for_link(IDENTITY, scale=1.0, feature_dim=3, episodes=5, horizon=chain_env.horizon)
        with pytest.raises(ConfigError, match="gamma parameters are for d=3"):
            run_lsvi_ucb(chain_env, 5, IDENTITY, params)
