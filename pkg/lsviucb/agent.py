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
Optimistic least-squares value iteration with generalized linear function
approximation, the baselines it is compared against, and the episode loop
that runs any of them.

Example:

```python
from lsviucb.agent import GammaParams, run_lsvi_ucb
from lsviucb.environments import make_chain
from lsviucb.links import IDENTITY

env = make_chain(4, 6)
params = GammaParams.for_link(
    IDENTITY, scale=0.02, feature_dim=env.feature_dim, episodes=500, horizon=env.horizon
)
log, metadata = run_lsvi_ucb(env, 500, IDENTITY, params, seed=0, ball_radius=env.feature_dim**0.5)
print(metadata.final_regret)
```
"""

from __future__ import annotations

import logging
import math
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from lsviucb._utils import check_unit_norm, generator, spawn_streams
from lsviucb.errors import ConfigError, DomainError, InvariantError
from lsviucb.links import LinkSpec, eval_link
from lsviucb.mdp import (
    EpisodicMdp,
    Policy,
    RegretLog,
    State,
    Trajectory,
    regret_update,
    rollout_episode,
)
from lsviucb.regression import (
    CovarianceState,
    DriftCounter,
    SolverOpts,
    fit_constrained_glm,
    mahalanobis_bonus_batch,
    update_covariance,
)

_logger = logging.getLogger(__name__)

ActionFeatures = Callable[[State], np.ndarray]

OPTIMISM_TOLERANCE = 1e-9
"""
How far below `Q*` an optimistic estimate may fall before it counts as a
violation.
"""

# Regression targets are a reward in [0, 1] plus a clipped continuation.
_TARGET_RANGE = (0.0, 2.0)
_TARGET_SLACK = 1e-12


class GammaParams(BaseModel):
    """
    Inputs to the confidence-width scale `gamma`.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    scale: float = Field(ge=0)
    """
    The multiplier `C`. `0` disables the bonus.
    """

    bonus_cap: Optional[float] = Field(default=None, gt=0)
    """
    The bonus cap `Gamma`. `None` selects the one-shot default, see
    `resolve_gamma`.
    """

    feature_dim: int = Field(ge=1)
    episodes: int = Field(ge=1)
    horizon: int = Field(ge=1)
    kappa: float = Field(gt=0)
    big_k: float = Field(gt=0)
    big_m: float = Field(ge=0)

    @classmethod
    def for_link(
        cls,
        link: LinkSpec,
        *,
        scale: float,
        feature_dim: int,
        episodes: int,
        horizon: int,
        bonus_cap: Optional[float] = None,
    ) -> GammaParams:
        """
        Fills in the link's declared constants.
        """
        return cls(
            scale=scale,
            bonus_cap=bonus_cap,
            feature_dim=feature_dim,
            episodes=episodes,
            horizon=horizon,
            kappa=link.kappa,
            big_k=link.big_k,
            big_m=link.big_m,
        )


def compute_gamma(p: GammaParams) -> float:
    """
    `gamma = C * K / kappa * sqrt(1 + M + K + d^2 * ln((1 + K + Gamma) * T * H))`.

    An unset `bonus_cap` is taken as `1` inside the logarithm.
    """
    cap = 1.0 if p.bonus_cap is None else p.bonus_cap
    log_term = math.log((1.0 + p.big_k + cap) * p.episodes * p.horizon)
    return p.scale * p.big_k / p.kappa * math.sqrt(1.0 + p.big_m + p.big_k + p.feature_dim**2 * log_term)


def default_bonus_cap(p: GammaParams) -> float:
    """
    The default bonus cap: `gamma` evaluated with `Gamma = 1` in the logarithm.
    """
    return compute_gamma(p.model_copy(update={"bonus_cap": 1.0}))


def resolve_gamma(p: GammaParams) -> Tuple[float, float]:
    """
    Returns `(gamma, Gamma)`.

    Without an explicit cap, `Gamma = default_bonus_cap(p)` and `gamma` is set
    to the same value. With one, `gamma = compute_gamma(p)`, and a cap below it
    is rejected with `ConfigError`.
    """
    if p.bonus_cap is None:
        cap = default_bonus_cap(p)
        return cap, cap

    gamma = compute_gamma(p)
    if gamma > p.bonus_cap * (1.0 + 1e-12):
        raise ConfigError(f"gamma {gamma:.6g} exceeds the bonus cap {p.bonus_cap:.6g}")
    return gamma, p.bonus_cap


def theoretical_regret_bound(gamma: float, feature_dim: int, episodes: int, horizon: int) -> float:
    """
    The confidence-sum regret bound `H * gamma * sqrt(T) * sqrt(2 d ln(1 + T/d))`.
    """
    d, T = feature_dim, episodes
    return horizon * gamma * math.sqrt(T) * math.sqrt(2 * d * math.log(1 + T / d))


@dataclass(frozen=True)
class OptimisticQ:
    """
    `Q(phi) = min{1, f(<phi, theta>) + gamma * ||phi||_{Lambda^{-1}}}`, further
    clipped below at `0`.
    """

    theta: np.ndarray
    gamma: float
    cov: CovarianceState
    link: LinkSpec
    drift: Optional[DriftCounter] = field(default=None, compare=False)

    def values(self, phi: np.ndarray) -> np.ndarray:
        """
        Evaluates the estimate over the last axis of `phi`.
        """
        phi = np.asarray(phi, dtype=float)
        fitted = eval_link(self.link, phi @ self.theta)
        bonus = self.gamma * mahalanobis_bonus_batch(self.cov, phi, self.drift)
        return np.clip(fitted + bonus, 0.0, 1.0)

    def value(self, phi: np.ndarray) -> float:
        """
        Evaluates the estimate at a single feature vector.
        """
        return float(self.values(phi))


def optimistic_q_eval(q: OptimisticQ, phi: np.ndarray) -> float:
    """
    Evaluates `q` at `phi`, a feature vector in the unit ball.
    """
    check_unit_norm(np.asarray(phi, dtype=float), name="feature")
    return q.value(phi)


class _Replay:
    """
    The data seen at one step across all episodes, in growable buffers.
    """

    def __init__(self, feature_dim: int, num_actions: int, has_next: bool) -> None:
        capacity = 64
        self.size = 0
        self._features = np.empty((capacity, feature_dim))
        self._rewards = np.empty(capacity)
        self._next = np.empty((capacity, num_actions, feature_dim)) if has_next else None

    def _grow(self) -> None:
        capacity = 2 * self._rewards.shape[0]
        self._features = np.resize(self._features, (capacity, self._features.shape[1]))
        self._rewards = np.resize(self._rewards, capacity)
        if self._next is not None:
            self._next = np.resize(self._next, (capacity, *self._next.shape[1:]))

    def append(self, x: np.ndarray, reward: float, next_features: Optional[np.ndarray]) -> None:
        if self.size == self._rewards.shape[0]:
            self._grow()
        self._features[self.size] = x
        self._rewards[self.size] = reward
        if self._next is not None:
            self._next[self.size] = next_features
        self.size += 1

    @property
    def features(self) -> np.ndarray:
        return self._features[: self.size]

    @property
    def rewards(self) -> np.ndarray:
        return self._rewards[: self.size]

    @property
    def next_features(self) -> np.ndarray:
        if self._next is None:
            raise DomainError("the last step has no successor features")
        return self._next[: self.size]


class Agent(ABC):
    """
    An episodic learner driven by `run_episodes`.
    """

    name: str
    """
    The agent's identifier in outputs (`lsvi_ucb`, `eps_greedy`, `random`).
    """

    gamma: float = 0.0
    """
    The confidence-width scale used for exploration bonuses.
    """

    bonus_cap: Optional[float] = None
    link: Optional[LinkSpec] = None
    solver_calls: int = 0
    solver_nonconverged: int = 0

    @abstractmethod
    def policy(self, rng: np.random.Generator) -> Policy:
        """
        Returns the policy to follow for the coming episode; `rng` drives
        any randomized action choice.
        """
        raise NotImplementedError  # pragma: no cover

    @abstractmethod
    def observe(self, trajectory: Trajectory) -> bool:
        """
        Learns from a completed episode. Returns `False` if a regression
        solver failed to converge.
        """
        raise NotImplementedError  # pragma: no cover

    def inspect(self, h: int, state: State, action: int) -> Tuple[float, float]:
        """
        Returns the agent's current estimate at `(h, state, action)` and the
        squared norm `||phi||^2_{Lambda^{-1}}` under its current covariance,
        or `nan` for quantities the agent does not maintain.
        """
        return math.nan, math.nan

    @property
    def bonus_clamp_events(self) -> int:
        """
        The number of clamped negative quadratic forms so far.
        """
        return 0


class LsviUcbAgent(Agent):
    """
    Optimistic least-squares value iteration over a generalized linear model.

    Per step `h` the agent keeps a covariance `Lambda_h` over every visited
    feature vector and an optimistic estimate. Before the first update every
    estimate is identically `1`. After each episode the estimates are refit
    backwards from the last step, each step's regression targets using the
    estimate of the following step that was just refit; the last step's
    targets are the bare rewards.

    Greedy ties are broken toward the lowest action index.
    """

    name = "lsvi_ucb"

    def __init__(
        self,
        action_features: ActionFeatures,
        *,
        horizon: int,
        num_actions: int,
        feature_dim: int,
        link: LinkSpec,
        gamma: float,
        ball_radius: float = 1.0,
        solver_opts: Optional[SolverOpts] = None,
        refit_every: int = 1,
        bonus_cap: Optional[float] = None,
    ) -> None:
        """
        Create a new `LsviUcbAgent`.

        `action_features(state)` returns the `(num_actions, feature_dim)`
        features of every action at `state`. With `refit_every = k > 1` the
        estimates are refit only after every `k`-th episode; covariances are
        updated after every episode regardless.
        """
        if not (math.isfinite(gamma) and gamma >= 0):
            raise ConfigError(f"gamma must be nonnegative, got {gamma}")
        if bonus_cap is not None and gamma > bonus_cap * (1.0 + 1e-12):
            raise ConfigError(f"gamma {gamma:.6g} exceeds the bonus cap {bonus_cap:.6g}")
        if refit_every < 1:
            raise ConfigError(f"refit_every must be at least 1, got {refit_every}")

        self._action_features = action_features
        self.horizon = horizon
        self.num_actions = num_actions
        self.feature_dim = feature_dim
        self.link = link
        self.gamma = gamma
        self.bonus_cap = bonus_cap
        self.ball_radius = ball_radius
        self.solver_opts = solver_opts or SolverOpts()
        self.refit_every = refit_every

        self.episodes_seen = 0
        self.solver_calls = 0
        self.solver_nonconverged = 0
        self._drift = DriftCounter()
        self._q: List[Optional[OptimisticQ]] = [None] * horizon
        self._cov = [CovarianceState.identity(feature_dim) for _ in range(horizon)]
        self._replay = [_Replay(feature_dim, num_actions, h < horizon - 1) for h in range(horizon)]

    @classmethod
    def for_env(cls, env: EpisodicMdp, **kwargs: object) -> LsviUcbAgent:
        """
        Create an agent over `env`'s features.
        """
        return cls(
            env.action_features,
            horizon=env.horizon,
            num_actions=env.num_actions,
            feature_dim=env.feature_dim,
            **kwargs,  # type: ignore[arg-type]
        )

    @property
    def bonus_clamp_events(self) -> int:
        """
        The number of clamped negative quadratic forms so far.
        """
        return self._drift.clamp_events

    def q_function(self, h: int) -> Optional[OptimisticQ]:
        """
        The current estimate at step `h`, or `None` while it is still
        identically `1`.
        """
        return self._q[h]

    def covariance(self, h: int) -> CovarianceState:
        """
        The covariance over every feature visited at step `h` so far.
        """
        return self._cov[h]

    def replay_features(self, h: int) -> np.ndarray:
        """
        Every feature vector visited at step `h`, in episode order.
        """
        return self._replay[h].features.copy()

    def action_values(self, h: int, state: State) -> np.ndarray:
        """
        The current estimates of every action at `(h, state)`.
        """
        q = self._q[h]
        if q is None:
            return np.ones(self.num_actions)
        return q.values(self._action_features(state))

    def greedy_action(self, h: int, state: State) -> int:
        """
        The action maximizing the current estimate, lowest index on ties.
        """
        return int(np.argmax(self.action_values(h, state)))

    def policy(self, rng: np.random.Generator) -> Policy:
        """
        The greedy policy of the current estimates; `rng` is unused.
        """
        return self.greedy_action

    def inspect(self, h: int, state: State, action: int) -> Tuple[float, float]:
        """
        The current estimate and squared covariance norm at `(h, state, action)`.
        """
        phi = self._action_features(state)[action]
        norm = float(mahalanobis_bonus_batch(self._cov[h], phi, self._drift))
        return float(self.action_values(h, state)[action]), norm**2

    def observe(self, trajectory: Trajectory) -> bool:
        """
        Absorbs `trajectory` and runs `backward_update` when a refit is due.
        """
        if len(trajectory) != self.horizon:
            raise DomainError(f"expected a trajectory of {self.horizon} steps, got {len(trajectory)}")

        for h, step in enumerate(trajectory.steps):
            x = self._action_features(step.state)[step.action]
            next_features = (
                self._action_features(trajectory.steps[h + 1].state) if h < self.horizon - 1 else None
            )
            self._replay[h].append(x, step.reward, next_features)
            self._cov[h] = update_covariance(self._cov[h], x, self.solver_opts.refresh_period)
        self.episodes_seen += 1

        if self.episodes_seen % self.refit_every != 0:
            return True
        return self.backward_update()

    def _targets(self, h: int) -> np.ndarray:
        replay = self._replay[h]
        targets = replay.rewards.copy()
        if h < self.horizon - 1:
            following = self._q[h + 1]
            if following is None:
                targets += 1.0
            else:
                targets += following.values(replay.next_features).max(axis=-1)

        lo, hi = _TARGET_RANGE
        if targets.min() < lo - _TARGET_SLACK or targets.max() > hi + _TARGET_SLACK:
            raise InvariantError(
                f"step {h} regression targets span [{targets.min()}, {targets.max()}], outside of [{lo}, {hi}]"
            )
        return targets

    def backward_update(self) -> bool:
        """
        Refits every step's estimate from the full replay, from the last
        step backwards. Returns `False` if any solver failed to converge.
        """
        converged = True
        for h in reversed(range(self.horizon)):
            X = self._replay[h].features
            y = self._targets(h)
            previous = self._q[h]
            fit = fit_constrained_glm(
                X,
                y,
                self.link,  # type: ignore[arg-type]
                self.ball_radius,
                self.solver_opts,
                warm_start=None if previous is None else previous.theta,
                gram=self._cov[h].lam - np.eye(self.feature_dim),
            )
            self.solver_calls += 1
            if not fit.converged:
                self.solver_nonconverged += 1
                converged = False

            self._q[h] = OptimisticQ(
                theta=fit.params.theta,
                gamma=self.gamma,
                cov=self._cov[h],
                link=self.link,  # type: ignore[arg-type]
                drift=self._drift,
            )
        return converged


class EpsGreedyAgent(LsviUcbAgent):
    """
    The regression stack of `LsviUcbAgent` without bonuses, acting uniformly
    at random with probability `epsilon`.
    """

    name = "eps_greedy"

    def __init__(self, action_features: ActionFeatures, *, epsilon: float = 0.1, **kwargs: object) -> None:
        """
        Create a new `EpsGreedyAgent`; the remaining arguments are those of
        `LsviUcbAgent`, without `gamma`.
        """
        if not (0.0 <= epsilon <= 1.0):
            raise ConfigError(f"epsilon must lie in [0, 1], got {epsilon}")
        super().__init__(action_features, gamma=0.0, **kwargs)  # type: ignore[arg-type]
        self.epsilon = epsilon

    def policy(self, rng: np.random.Generator) -> Policy:
        """
        The epsilon-greedy policy of the current estimates.
        """

        def act(h: int, state: State) -> int:
            if rng.uniform() < self.epsilon:
                return int(rng.integers(self.num_actions))
            return self.greedy_action(h, state)

        return act


class RandomAgent(Agent):
    """
    Acts uniformly at random and learns nothing.
    """

    name = "random"

    def __init__(self, num_actions: int) -> None:
        """
        Create a new `RandomAgent`.
        """
        self.num_actions = num_actions

    def policy(self, rng: np.random.Generator) -> Policy:
        """
        The uniform policy.
        """
        return lambda h, state: int(rng.integers(self.num_actions))

    def observe(self, trajectory: Trajectory) -> bool:
        """
        Does nothing.
        """
        return True


@dataclass(frozen=True)
class EpisodeRecord:
    """
    What one episode leaves behind for diagnostics.
    """

    reward: float
    bonus_sum: float
    """
    `sum_h gamma * ||phi_h||_{Lambda_{h,t-1}^{-1}}` over the visited pairs.
    """

    solver_converged: bool
    features: np.ndarray
    """
    The visited feature vectors, shape `(H, d)`.
    """

    squared_norms: np.ndarray
    """
    `||phi_h||^2_{Lambda_{h,t-1}^{-1}}` before the episode's update, shape `(H,)`.
    """

    qbar: np.ndarray
    """
    The agent's pre-update estimates at the visited pairs, shape `(H,)`.
    """

    qstar: np.ndarray
    """
    `Q*` at the visited pairs, or `nan` without an oracle, shape `(H,)`.
    """


_ARTIFACT_ARRAYS = ("rewards", "bonus_sums", "solver_converged", "features", "squared_norms", "qbar", "qstar")


@dataclass(frozen=True)
class RunArtifacts:
    """
    Per-episode arrays of a run, stacked over episodes.
    """

    rewards: np.ndarray
    bonus_sums: np.ndarray
    solver_converged: np.ndarray
    features: np.ndarray
    squared_norms: np.ndarray
    qbar: np.ndarray
    qstar: np.ndarray
    gamma: float
    v_star: Optional[float]

    @classmethod
    def from_records(cls, records: List[EpisodeRecord], gamma: float, v_star: Optional[float]) -> RunArtifacts:
        """
        Stacks per-episode records.
        """
        return cls(
            rewards=np.array([r.reward for r in records]),
            bonus_sums=np.array([r.bonus_sum for r in records]),
            solver_converged=np.array([r.solver_converged for r in records], dtype=bool),
            features=np.stack([r.features for r in records]),
            squared_norms=np.stack([r.squared_norms for r in records]),
            qbar=np.stack([r.qbar for r in records]),
            qstar=np.stack([r.qstar for r in records]),
            gamma=gamma,
            v_star=v_star,
        )

    @property
    def episodes(self) -> int:
        """
        The number of episodes recorded.
        """
        return int(self.rewards.shape[0])

    def save(self, path: Union[str, Path]) -> None:
        """
        Writes the artifacts to an `.npz` archive.
        """
        np.savez(
            path,
            gamma=np.float64(self.gamma),
            v_star=np.float64(math.nan if self.v_star is None else self.v_star),
            **{name: getattr(self, name) for name in _ARTIFACT_ARRAYS},
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> RunArtifacts:
        """
        Reads artifacts written by `save`.
        """
        with np.load(path, allow_pickle=False) as archive:
            v_star = float(archive["v_star"])
            return cls(
                gamma=float(archive["gamma"]),
                v_star=None if math.isnan(v_star) else v_star,
                **{name: archive[name] for name in _ARTIFACT_ARRAYS},
            )


class RunMetadata(BaseModel):
    """
    A summary of one run, emitted as JSON.
    """

    model_config = ConfigDict(frozen=True)

    agent: str
    seed: int
    link: Optional[str] = None
    gamma: float
    gamma_scale: Optional[float] = None
    """
    The multiplier `C` the confidence width was resolved from, when it was.
    """

    bonus_cap: Optional[float] = None
    episodes: int
    horizon: int
    feature_dim: int
    solver_calls: int
    solver_nonconverged: int
    optimism_checks: int
    optimism_violations: int
    bonus_clamp_events: int
    wall_clock_seconds: float
    regret_bound: float
    v_star: Optional[float] = None
    final_regret: Optional[float] = None


@dataclass(frozen=True)
class RunResult:
    """
    Everything `run_episodes` produces.
    """

    log: RegretLog
    metadata: RunMetadata
    artifacts: RunArtifacts


def run_episodes(
    env: EpisodicMdp,
    agent: Agent,
    episodes: int,
    seed: Union[int, np.random.SeedSequence],
    *,
    gamma_scale: Optional[float] = None,
) -> RunResult:
    """
    Runs `episodes` episodes of `agent` on `env`.

    `gamma_scale` is recorded in the metadata when the agent's width was
    derived from a multiplier.

    Every episode draws its own child of `seed`, split into an environment
    stream and a policy stream, so a run depends only on `seed`. Regret is
    measured against the environment's exact `V*` when it has an oracle.
    """
    if episodes < 1:
        raise ConfigError(f"a run needs at least one episode, got {episodes}")
    (episode_root,) = spawn_streams(seed, 1)
    started = time.perf_counter()

    oracle = env.exact_oracle()
    if oracle is None:
        _logger.warning(f"{type(env).__name__} has no exact oracle; logging raw rewards only")
    log = RegretLog(v_star=None if oracle is None else oracle.v_star)

    records = []
    for child in episode_root.spawn(episodes):
        env_stream, policy_stream = child.spawn(2)
        trajectory = rollout_episode(env, agent.policy(generator(policy_stream)), generator(env_stream))

        features, norms, qbar, qstar = [], [], [], []
        for h, step in enumerate(trajectory.steps):
            estimate, norm = agent.inspect(h, step.state, step.action)
            features.append(env.features(step.state, step.action))
            norms.append(norm)
            qbar.append(estimate)
            qstar.append(math.nan if oracle is None else oracle.value(h, step.state, step.action))

        norms_arr = np.array(norms)
        bonus_sum = agent.gamma * float(np.sqrt(norms_arr[np.isfinite(norms_arr)]).sum())
        converged = agent.observe(trajectory)
        log = regret_update(log, trajectory.total_reward)
        records.append(
            EpisodeRecord(
                reward=trajectory.total_reward,
                bonus_sum=bonus_sum,
                solver_converged=converged,
                features=np.stack(features),
                squared_norms=norms_arr,
                qbar=np.array(qbar),
                qstar=np.array(qstar),
            )
        )

    artifacts = RunArtifacts.from_records(records, agent.gamma, log.v_star)
    checked = np.isfinite(artifacts.qbar) & np.isfinite(artifacts.qstar)
    violations = checked & (artifacts.qbar < artifacts.qstar - OPTIMISM_TOLERANCE)

    metadata = RunMetadata(
        agent=agent.name,
        seed=int(seed) if isinstance(seed, int) else int(seed.entropy),  # type: ignore[arg-type]
        link=None if agent.link is None else agent.link.name,
        gamma=agent.gamma,
        gamma_scale=gamma_scale,
        bonus_cap=agent.bonus_cap,
        episodes=episodes,
        horizon=env.horizon,
        feature_dim=env.feature_dim,
        solver_calls=agent.solver_calls,
        solver_nonconverged=agent.solver_nonconverged,
        optimism_checks=int(checked.sum()),
        optimism_violations=int(violations.sum()),
        bonus_clamp_events=agent.bonus_clamp_events,
        wall_clock_seconds=time.perf_counter() - started,
        regret_bound=theoretical_regret_bound(agent.gamma, env.feature_dim, episodes, env.horizon),
        v_star=log.v_star,
        final_regret=log.final_regret,
    )
    _logger.debug(
        f"{agent.name}: {episodes} episodes in {metadata.wall_clock_seconds:.2f}s, "
        f"final regret {metadata.final_regret}"
    )
    return RunResult(log=log, metadata=metadata, artifacts=artifacts)


def run_lsvi_ucb(
    env: EpisodicMdp,
    episodes: int,
    link: LinkSpec,
    gamma_params: GammaParams,
    solver_opts: Optional[SolverOpts] = None,
    seed: int = 0,
    *,
    ball_radius: float = 1.0,
    refit_every: int = 1,
) -> Tuple[RegretLog, RunMetadata]:
    """
    Runs `LsviUcbAgent` on `env` for `episodes` episodes with the confidence
    width resolved from `gamma_params`.

    Raises `ConfigError` if `gamma_params` disagrees with `env` on the
    feature dimension or horizon.
    """
    if (gamma_params.feature_dim, gamma_params.horizon) != (env.feature_dim, env.horizon):
        raise ConfigError(
            f"gamma parameters are for d={gamma_params.feature_dim}, H={gamma_params.horizon}; "
            f"environment has d={env.feature_dim}, H={env.horizon}"
        )
    gamma, cap = resolve_gamma(gamma_params)
    agent = LsviUcbAgent.for_env(
        env,
        link=link,
        gamma=gamma,
        bonus_cap=cap,
        ball_radius=ball_radius,
        solver_opts=solver_opts,
        refit_every=refit_every,
    )
    result = run_episodes(env, agent, episodes, seed, gamma_scale=gamma_params.scale)
    return result.log, result.metadata
