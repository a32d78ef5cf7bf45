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

"""
Episodic MDPs, trajectories, exact dynamic-programming oracles and regret
bookkeeping.

Steps are indexed from `0` to `horizon - 1` throughout the package.
"""

from __future__ import annotations

import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Any, Callable, Hashable, Iterator, Optional, Protocol, Tuple

import numpy as np

from lsviucb.errors import (
    DomainError,
    EnvironmentFault,
    NormalizationViolation,
    UnsupportedOracle,
)

_logger = logging.getLogger(__name__)

State = Hashable
"""
An environment-specific state. The agent never inspects states directly;
it only sees their feature vectors.
"""

Policy = Callable[[int, Any], int]
"""
A (possibly non-stationary) policy: `(step, state) -> action index`.
"""

# Numerical slack for sums of float rewards and probability rows.
_REWARD_SLACK = 1e-12
_SIMPLEX_SLACK = 1e-12


class QStar(Protocol):
    """
    Exact optimal values of an environment.
    """

    v_star: float
    """
    The optimal expected episode reward, `E_{s ~ mu}[max_a Q*_0(s, a)]`.
    """

    def value(self, h: int, state: State, action: int) -> float:
        """
        Returns `Q*_h(state, action)`.
        """
        ...  # pragma: no cover


class EpisodicMdp(ABC):
    """
    A finite-horizon MDP with a finite action set and a feature map into the
    unit ball.

    Environments are immutable; all randomness flows through the `rng`
    arguments, so they are safe to share between concurrent rollouts.
    """

    horizon: int
    """
    The number of steps per episode, `H`.
    """

    num_actions: int
    """
    The number of actions, `|A|`. Actions are `0 .. num_actions - 1`.
    """

    feature_dim: int
    """
    The feature dimension, `d`.
    """

    @abstractmethod
    def sample_initial(self, rng: np.random.Generator) -> State:
        """
        Draws an initial state from the environment's start distribution.
        """
        raise NotImplementedError  # pragma: no cover

    @abstractmethod
    def step(
        self, h: int, state: State, action: int, rng: np.random.Generator
    ) -> Tuple[State, float]:
        """
        Takes `action` in `state` at step `h`, returning the next state and
        the realized reward.

        The state returned at step `horizon - 1` is terminal and never acted in.
        """
        raise NotImplementedError  # pragma: no cover

    @abstractmethod
    def features(self, state: State, action: int) -> np.ndarray:
        """
        Returns `phi(state, action)`, a vector of length `feature_dim` with
        Euclidean norm at most 1.
        """
        raise NotImplementedError  # pragma: no cover

    def action_features(self, state: State) -> np.ndarray:
        """
        Returns the `(num_actions, feature_dim)` matrix of features of every
        action at `state`.
        """
        return np.stack([self.features(state, a) for a in range(self.num_actions)])

    def exact_oracle(self) -> Optional[QStar]:
        """
        Returns exact `Q*` values when the environment can be solved exactly,
        or `None`.
        """
        return None


class EnumerableMdp(EpisodicMdp):
    """
    An MDP over a finite state set that exposes exact transition and reward
    tables. Subclasses set `transitions`, `rewards`, `initial` and
    `feature_table`.
    """

    num_states: int
    """
    The number of states. States are `0 .. num_states - 1`.
    """

    transitions: np.ndarray
    """
    `P[h, s, a, s']`, shape `(H, S, A, S)`.
    """

    rewards: np.ndarray
    """
    Expected rewards `R[h, s, a]`, shape `(H, S, A)`.
    """

    initial: np.ndarray
    """
    The initial state distribution `mu`, shape `(S,)`.
    """

    feature_table: np.ndarray
    """
    `phi(s, a)` for every pair, shape `(S, A, d)`.
    """

    stochastic_rewards: bool = False
    """
    When set, the realized reward at a step is `(1/H) * Bernoulli(H * R[h, s, a])`
    instead of `R[h, s, a]`; the expectation is unchanged.
    """

    def _validate_tables(self) -> None:
        """
        Checks the probability-simplex, reward and feature-norm invariants
        of the tables, raising `EnvironmentFault`.
        """
        H, S, A = self.horizon, self.num_states, self.num_actions
        if self.transitions.shape != (H, S, A, S):
            raise EnvironmentFault(f"transition table has shape {self.transitions.shape}")
        if self.rewards.shape != (H, S, A):
            raise EnvironmentFault(f"reward table has shape {self.rewards.shape}")
        if self.feature_table.shape != (S, A, self.feature_dim):
            raise EnvironmentFault(f"feature table has shape {self.feature_table.shape}")

        if self.transitions.min() < 0 or np.abs(self.transitions.sum(-1) - 1).max() > _SIMPLEX_SLACK:
            raise EnvironmentFault("transition rows are not probability vectors")
        if self.initial.min() < 0 or abs(self.initial.sum() - 1) > _SIMPLEX_SLACK:
            raise EnvironmentFault("initial distribution is not a probability vector")
        if self.rewards.min() < 0 or self.rewards.max() > 1.0:
            raise EnvironmentFault("per-step rewards must lie in [0, 1]")
        if self.max_return() > 1.0 + _REWARD_SLACK:
            raise EnvironmentFault("some trajectory collects a total reward above 1")
        if self.stochastic_rewards and self.rewards.max() > 1.0 / H + _REWARD_SLACK:
            raise EnvironmentFault("stochastic rewards need expected per-step rewards in [0, 1/H]")
        if np.linalg.norm(self.feature_table, axis=-1).max() > 1.0 + 1e-9:
            raise EnvironmentFault("features leave the unit ball")

    def max_return(self) -> float:
        """
        The largest total reward any trajectory with positive probability can
        collect, maximizing over actions and over reachable next states.
        """
        support = self.transitions > 0
        upper = np.zeros(self.num_states)
        for h in reversed(range(self.horizon)):
            continuation = np.where(support[h], upper, -np.inf).max(axis=-1)
            upper = (self.rewards[h] + continuation).max(axis=-1)
        return float(upper[self.initial > 0].max())

    def bellman_backup(self, h: int, values: np.ndarray) -> np.ndarray:
        """
        Applies the exact Bellman operator of step `h` to next-step state
        values, returning an `(S, A)` table `R_h + P_h values`.
        """
        values = np.asarray(values, dtype=float)
        if values.shape != (self.num_states,):
            raise DomainError(f"expected {self.num_states} state values, got shape {values.shape}")
        return self.rewards[h] + self.transitions[h] @ values

    def sample_initial(self, rng: np.random.Generator) -> int:
        """
        Draws the initial state from `initial`.
        """
        return int(rng.choice(self.num_states, p=self.initial))

    def step(self, h: int, state: State, action: int, rng: np.random.Generator) -> Tuple[int, float]:
        """
        Samples the next state from `transitions[h, state, action]`.
        """
        s = int(state)  # type: ignore[call-overload]
        next_state = int(rng.choice(self.num_states, p=self.transitions[h, s, action]))
        mean = float(self.rewards[h, s, action])
        if self.stochastic_rewards:
            reward = float(rng.uniform() < mean * self.horizon) / self.horizon
        else:
            reward = mean
        return next_state, reward

    def features(self, state: State, action: int) -> np.ndarray:
        """
        Looks the features up in `feature_table`.
        """
        return self.feature_table[int(state), action]  # type: ignore[call-overload]

    def action_features(self, state: State) -> np.ndarray:
        """
        Looks up the features of every action at `state`.
        """
        return self.feature_table[int(state)]  # type: ignore[call-overload]

    def exact_oracle(self) -> TabularQStar:
        """
        Solves the MDP by backward induction.
        """
        return backward_induction(self.transitions, self.rewards, self.initial)


@dataclass(frozen=True)
class TabularQStar:
    """
    `Q*` and `V*` tables of an enumerable MDP.
    """

    q: np.ndarray
    """
    `Q*_h(s, a)`, shape `(H, S, A)`.
    """

    v: np.ndarray
    """
    `V*_h(s)`, shape `(H + 1, S)`; the last row is zero.
    """

    v_star: float
    """
    The optimal expected episode reward.
    """

    def value(self, h: int, state: State, action: int) -> float:
        """
        Returns `Q*_h(state, action)`.
        """
        return float(self.q[h, int(state), action])  # type: ignore[call-overload]


def backward_induction(
    transitions: np.ndarray, rewards: np.ndarray, initial: np.ndarray
) -> TabularQStar:
    """
    Computes `Q*` for tabular dynamics by backward induction.
    """
    H, S, A, _ = transitions.shape
    q = np.zeros((H, S, A))
    v = np.zeros((H + 1, S))
    for h in reversed(range(H)):
        q[h] = rewards[h] + transitions[h] @ v[h + 1]
        v[h] = q[h].max(axis=-1)
    return TabularQStar(q=q, v=v, v_star=float(initial @ v[0]))


def exact_q_values(env: EpisodicMdp) -> QStar:
    """
    Returns the exact optimal values of `env`: backward induction for
    enumerable environments, or the environment's closed form.

    Raises `UnsupportedOracle` for environments that expose neither.
    """
    oracle = env.exact_oracle()
    if oracle is None:
        raise UnsupportedOracle(f"{type(env).__name__} does not support exact Q* values")
    return oracle


def policy_value(env: EnumerableMdp, policy: np.ndarray) -> float:
    """
    Returns the exact expected episode reward of a deterministic policy,
    given as an `(H, S)` table of action indices.
    """
    H, S = env.horizon, env.num_states
    if policy.shape != (H, S):
        raise DomainError(f"policy table must have shape {(H, S)}, got {policy.shape}")

    v = np.zeros(S)
    states = np.arange(S)
    for h in reversed(range(H)):
        actions = policy[h]
        v = env.rewards[h, states, actions] + env.transitions[h, states, actions] @ v
    return float(env.initial @ v)


def enumerate_deterministic_policies(env: EnumerableMdp) -> Iterator[np.ndarray]:
    """
    Yields every deterministic policy of `env` as an `(H, S)` action table.

    There are `A ** (S * H)` of them; this is only meant for tiny instances.
    """
    shape = (env.horizon, env.num_states)
    for choice in itertools.product(range(env.num_actions), repeat=shape[0] * shape[1]):
        yield np.asarray(choice, dtype=int).reshape(shape)


@dataclass(frozen=True)
class StepRecord:
    """
    One step of an episode.
    """

    state: State
    action: int
    reward: float


@dataclass(frozen=True)
class Trajectory:
    """
    The `H` steps of one episode, in order.
    """

    steps: Tuple[StepRecord, ...]

    def __len__(self) -> int:
        """
        Returns the number of steps.
        """
        return len(self.steps)

    @property
    def total_reward(self) -> float:
        """
        The episode's summed reward.
        """
        return math.fsum(step.reward for step in self.steps)


def rollout_episode(env: EpisodicMdp, policy: Policy, rng: np.random.Generator) -> Trajectory:
    """
    Runs one episode of `env` under `policy`.

    The same `rng` state always yields the same trajectory. Reward
    normalization is an obligation of the environment and is checked here:
    a non-finite reward raises `EnvironmentFault`, an episode total outside of
    `[0, 1]` raises `NormalizationViolation`.
    """
    state = env.sample_initial(rng)
    steps = []
    for h in range(env.horizon):
        action = policy(h, state)
        if not (0 <= action < env.num_actions):
            raise DomainError(f"policy chose invalid action {action} at step {h}")

        next_state, reward = env.step(h, state, action, rng)
        if not math.isfinite(reward):
            raise EnvironmentFault(f"non-finite reward {reward} at step {h}")

        steps.append(StepRecord(state=state, action=int(action), reward=float(reward)))
        state = next_state

    trajectory = Trajectory(steps=tuple(steps))
    total = trajectory.total_reward
    if not (-_REWARD_SLACK <= total <= 1.0 + _REWARD_SLACK):
        raise NormalizationViolation(f"episode reward {total} is outside of [0, 1]")
    return trajectory


@dataclass(frozen=True)
class RegretLog:
    """
    Per-episode rewards and the cumulative regret they induce.

    Cumulative regret is always derived from the rewards, never stored.
    """

    v_star: Optional[float]
    """
    The optimal expected episode reward, when an oracle provides it.
    """

    per_episode_reward: Tuple[float, ...] = ()
    """
    Realized episode rewards, in order.
    """

    @property
    def episodes(self) -> int:
        """
        The number of logged episodes.
        """
        return len(self.per_episode_reward)

    @property
    def cumulative_regret(self) -> Optional[np.ndarray]:
        """
        `(t + 1) * v_star - sum(rewards[:t + 1])` for every logged episode `t`,
        or `None` without a reference value.
        """
        if self.v_star is None:
            return None
        rewards = np.asarray(self.per_episode_reward, dtype=float)
        return np.arange(1, rewards.size + 1) * self.v_star - np.cumsum(rewards)

    @property
    def final_regret(self) -> Optional[float]:
        """
        The cumulative regret after the last logged episode.
        """
        regret = self.cumulative_regret
        if regret is None or regret.size == 0:
            return None
        return float(regret[-1])


def regret_update(log: RegretLog, episode_reward: float) -> RegretLog:
    """
    Returns a new log with `episode_reward` appended.

    Raises `NormalizationViolation` unless the reward lies in `[0, 1]`.
    """
    if not (math.isfinite(episode_reward) and -_REWARD_SLACK <= episode_reward <= 1.0 + _REWARD_SLACK):
        raise NormalizationViolation(f"episode reward {episode_reward} is outside of [0, 1]")
    return replace(log, per_episode_reward=log.per_episode_reward + (float(episode_reward),))
