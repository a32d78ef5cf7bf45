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
Concrete environments: random tabular MDPs, synthetic linear MDPs, a
counterexample MDP that satisfies optimistic closure without being a linear
MDP, and a hard-exploration chain.

Every constructor is a pure function of its parameters and the `rng` it is
handed. Tables are frozen after construction.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, NamedTuple, Optional, Tuple

import numpy as np

from lsviucb.errors import ConfigError, ConstructionError, DomainError
from lsviucb.mdp import EnumerableMdp, EpisodicMdp, State

if TYPE_CHECKING:
    from lsviucb.harness.config import EnvConfig  # pragma: no cover

_logger = logging.getLogger(__name__)

ENV_FAMILIES = ("tabular", "linear", "counterexample", "chain")

MAX_CONSTRUCTION_ATTEMPTS = 10_000
"""
The number of candidates `make_linear_mdp` draws before giving up.
"""


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _require_positive(**params: int) -> None:
    for name, value in params.items():
        if value < 1:
            raise ConfigError(f"{name} must be at least 1, got {value}")


class TabularMdp(EnumerableMdp):
    """
    A finite MDP with time-inhomogeneous transition and reward tables and
    standard-basis features `phi(s, a) = e_{s * A + a}`.
    """

    def __init__(
        self,
        transitions: np.ndarray,
        rewards: np.ndarray,
        initial: np.ndarray,
        *,
        stochastic_rewards: bool = False,
    ) -> None:
        """
        Create a new `TabularMdp` from `P[h, s, a, s']`, `R[h, s, a]` and `mu`.

        Raises `EnvironmentFault` if the tables are not a valid normalized MDP.
        """
        self.transitions = _frozen(transitions)
        self.rewards = _frozen(rewards)
        self.initial = _frozen(initial)
        self.horizon, self.num_states, self.num_actions = self.rewards.shape
        self.feature_dim = self.num_states * self.num_actions
        self.feature_table = _frozen(
            np.eye(self.feature_dim).reshape(self.num_states, self.num_actions, self.feature_dim)
        )
        self.stochastic_rewards = stochastic_rewards
        self._validate_tables()


class ChainMdp(TabularMdp):
    """
    A deterministic chain of `length` states plus an absorbing dead state.

    Action `1` moves one state to the right and action `0` falls into the dead
    state. The last chain state is absorbing and pays `1` at the final step of
    the episode, so only the all-right action sequence is ever rewarded.
    """

    RIGHT = 1
    DEAD_END = 0

    def __init__(self, length: int, horizon: int) -> None:
        """
        Create a new `ChainMdp`.

        Raises `ConfigError` unless `horizon >= length`, since the goal is
        otherwise unreachable.
        """
        _require_positive(num_states=length, horizon=horizon)
        if horizon < length:
            raise ConfigError(f"chain of {length} states needs a horizon of at least {length}, got {horizon}")

        self.length = length
        num_states = length + 1
        goal, dead = length - 1, length

        transitions = np.zeros((horizon, num_states, 2, num_states))
        for s in range(length - 1):
            transitions[:, s, self.DEAD_END, dead] = 1.0
            transitions[:, s, self.RIGHT, s + 1] = 1.0
        transitions[:, goal, :, goal] = 1.0
        transitions[:, dead, :, dead] = 1.0

        rewards = np.zeros((horizon, num_states, 2))
        rewards[horizon - 1, goal, :] = 1.0

        initial = np.zeros(num_states)
        initial[0] = 1.0

        super().__init__(transitions, rewards, initial)

    @property
    def goal(self) -> int:
        """
        The rewarding state.
        """
        return self.length - 1

    @property
    def dead(self) -> int:
        """
        The absorbing dead state.
        """
        return self.length


class LinearMdp(EnumerableMdp):
    """
    A linear MDP over finite states: `P(s' | s, a) = <psi(s, a), mu(s')>` and
    `E[r | s, a] = <psi(s, a), eta>`, with the same dynamics at every step.

    The agent observes `psi` as its features.
    """

    def __init__(
        self,
        psi: np.ndarray,
        mu: np.ndarray,
        eta: np.ndarray,
        initial: np.ndarray,
        horizon: int,
        *,
        stochastic_rewards: bool = False,
    ) -> None:
        """
        Create a new `LinearMdp` from `psi` of shape `(S, A, d)`, next-state
        measures `mu` of shape `(S, d)` (one column per latent dimension),
        rewards `eta` of shape `(d,)` and an initial distribution.
        """
        self.psi = _frozen(psi)
        self.mu = _frozen(mu)
        self.eta = _frozen(eta)
        self.initial = _frozen(initial)
        self.num_states, self.num_actions, self.feature_dim = self.psi.shape
        self.horizon = horizon

        step_transitions = np.einsum("sad,td->sat", self.psi, self.mu)
        step_rewards = self.psi @ self.eta
        self.transitions = _frozen(np.broadcast_to(step_transitions, (horizon, *step_transitions.shape)))
        self.rewards = _frozen(np.broadcast_to(step_rewards, (horizon, *step_rewards.shape)))
        self.feature_table = self.psi
        self.stochastic_rewards = stochastic_rewards
        self._validate_tables()


class CounterexampleState(NamedTuple):
    """
    A counterexample state: the stage (`0`, `1`, or the terminal `2`) and the
    episode's `alpha`.
    """

    stage: int
    alpha: float


class CounterexampleQStar:
    """
    Closed-form optimal values of `CounterexampleMdp`: both actions at both
    stages are worth `0.1 * alpha / bonus_cap`.
    """

    def __init__(self, bonus_cap: float) -> None:
        """
        Create the oracle for a counterexample with the given bonus cap.
        """
        self._scale = 0.1 / bonus_cap
        self.v_star = 0.5 * self._scale

    def value(self, h: int, state: State, action: int) -> float:
        """
        Returns `Q*_h(state, action)`.
        """
        return self._scale * state.alpha  # type: ignore[attr-defined, no-any-return]


class CounterexampleMdp(EpisodicMdp):
    """
    A two-step MDP with a continuum of states that satisfies optimistic
    closure for the identity link but is not a linear MDP.

    Each episode draws `alpha ~ Uniform[0, 1]`. At stage 0 both actions have
    features `alpha * e1 + (1 - alpha) * e2` and pay nothing; at stage 1 both
    have features `alpha * x`, with `x = (0.1 / bonus_cap) * (1, 1)`, and pay
    `0.1 * alpha / bonus_cap`. Transitions are deterministic.
    """

    horizon = 2
    num_actions = 2
    feature_dim = 2

    def __init__(self, bonus_cap: float = 1.0) -> None:
        """
        Create a new `CounterexampleMdp`.

        Raises `ConfigError` if `bonus_cap` is so small that the clipped
        backup of some bonus-augmented function would saturate, which would
        break the closure property the construction exists to exhibit.
        """
        if not (math.isfinite(bonus_cap) and bonus_cap > 0):
            raise ConfigError(f"counterexample bonus cap must be positive, got {bonus_cap}")
        if 0.1 * math.sqrt(2) * (1 + 1 / bonus_cap) > 1:
            raise ConfigError(
                f"counterexample bonus cap {bonus_cap} is too small; need 0.1 * sqrt(2) * (1 + 1/cap) <= 1"
            )
        self.bonus_cap = bonus_cap
        self.x = np.full(2, 0.1 / bonus_cap)
        self.x.setflags(write=False)

    def sample_initial(self, rng: np.random.Generator) -> CounterexampleState:
        """
        Draws a fresh `alpha` for the episode.
        """
        return CounterexampleState(stage=0, alpha=float(rng.uniform()))

    def step(
        self, h: int, state: State, action: int, rng: np.random.Generator
    ) -> Tuple[CounterexampleState, float]:
        """
        Advances one stage; `rng` is unused since transitions are deterministic.
        """
        stage, alpha = state  # type: ignore[misc]
        reward = 0.0 if stage == 0 else 0.1 * alpha / self.bonus_cap
        return CounterexampleState(stage=stage + 1, alpha=alpha), reward

    def features(self, state: State, action: int) -> np.ndarray:
        """
        Returns the stage-dependent features; both actions share them.
        """
        stage, alpha = state  # type: ignore[misc]
        if stage == 0:
            return np.array([alpha, 1.0 - alpha])
        return alpha * self.x

    def exact_oracle(self) -> CounterexampleQStar:
        """
        Returns the closed-form optimal values.
        """
        return CounterexampleQStar(self.bonus_cap)

    def backup(
        self,
        alpha: np.ndarray,
        theta: np.ndarray,
        gamma: float,
        a_matrix: np.ndarray,
    ) -> np.ndarray:
        """
        The exact stage-0 Bellman backup, at every `alpha`, of the
        bonus-augmented identity-link function
        `g(phi) = min{1, <phi, theta> + gamma * sqrt(phi^T A phi)}`.

        The stage-1 reward `0.1 * alpha / bonus_cap` is included. Both
        actions are equivalent, so the maximization over next actions is
        trivial.
        """
        alpha = np.asarray(alpha, dtype=float)
        if np.any(alpha < 0) or np.any(alpha > 1):
            raise DomainError("alpha must lie in [0, 1]")
        inner = float(self.x @ theta)
        width = math.sqrt(max(float(self.x @ a_matrix @ self.x), 0.0))
        g = np.minimum(1.0, np.clip(alpha * inner, -1.0, 1.0) + gamma * alpha * width)
        return 0.1 * alpha / self.bonus_cap + g


def make_tabular_random(
    num_states: int,
    num_actions: int,
    horizon: int,
    rng: np.random.Generator,
    *,
    stochastic_rewards: bool = False,
) -> TabularMdp:
    """
    Draws a random tabular MDP: Dirichlet(1) transition rows and initial
    distribution, and per-step expected rewards uniform on `[0, 1/H]`.
    """
    _require_positive(num_states=num_states, num_actions=num_actions, horizon=horizon)
    S, A, H = num_states, num_actions, horizon
    transitions = rng.dirichlet(np.ones(S), size=(H, S, A))
    initial = rng.dirichlet(np.ones(S))
    rewards = rng.uniform(0.0, 1.0 / H, size=(H, S, A))
    return TabularMdp(transitions, rewards, initial, stochastic_rewards=stochastic_rewards)


def make_linear_mdp(
    feature_dim: int,
    num_states: int,
    num_actions: int,
    horizon: int,
    rng: np.random.Generator,
    *,
    psi: Optional[np.ndarray] = None,
    stochastic_rewards: bool = False,
) -> LinearMdp:
    """
    Draws a random linear MDP with `feature_dim` latent dimensions.

    Each `psi(s, a)` is a point of the probability simplex, each latent
    dimension's next-state measure is a probability vector, and
    `eta ~ Uniform[0, 1/H]^d`, so that every candidate has valid transition
    rows and rewards by construction. Candidates are rejected until `psi`
    has full column rank and the transition rows pass the simplex check; the
    search gives up with `ConstructionError` after
    `MAX_CONSTRUCTION_ATTEMPTS` candidates (in particular when
    `feature_dim > num_states * num_actions`).

    A fixed `psi` of shape `(S, A, d)` may be supplied; it must already lie in
    the simplex.
    """
    _require_positive(
        feature_dim=feature_dim, num_states=num_states, num_actions=num_actions, horizon=horizon
    )
    S, A, d, H = num_states, num_actions, feature_dim, horizon
    if psi is not None:
        psi = np.asarray(psi, dtype=float)
        if psi.shape != (S, A, d):
            raise ConfigError(f"psi must have shape {(S, A, d)}, got {psi.shape}")
        if psi.min() < 0 or np.abs(psi.sum(-1) - 1).max() > 1e-12:
            raise ConfigError("psi rows must lie in the probability simplex")

    for attempt in range(1, MAX_CONSTRUCTION_ATTEMPTS + 1):
        candidate_psi = psi if psi is not None else rng.dirichlet(np.ones(d), size=(S, A))
        mu = rng.dirichlet(np.ones(S), size=d).T
        eta = rng.uniform(0.0, 1.0 / H, size=d)

        if np.linalg.matrix_rank(candidate_psi.reshape(S * A, d)) < d:
            _logger.debug(f"linear MDP candidate {attempt}: rank-deficient features")
            continue
        rows = np.einsum("sad,td->sat", candidate_psi, mu)
        if rows.min() < 0 or np.abs(rows.sum(-1) - 1).max() > 1e-12:
            _logger.debug(f"linear MDP candidate {attempt}: invalid transition rows")
            continue

        initial = rng.dirichlet(np.ones(S))
        return LinearMdp(candidate_psi, mu, eta, initial, H, stochastic_rewards=stochastic_rewards)

    raise ConstructionError(
        f"no valid linear MDP with d={d}, S={S}, A={A} after {MAX_CONSTRUCTION_ATTEMPTS} attempts"
    )


def make_counterexample(bonus_cap: float = 1.0) -> CounterexampleMdp:
    """
    Builds the counterexample MDP for bonus cap `bonus_cap`.
    """
    return CounterexampleMdp(bonus_cap)


def make_chain(num_states: int, horizon: int) -> ChainMdp:
    """
    Builds a chain of `num_states` states with horizon `horizon`.
    """
    return ChainMdp(num_states, horizon)


def make_environment(config: EnvConfig, rng: np.random.Generator) -> EpisodicMdp:
    """
    Builds the environment described by `config`, drawing any randomness
    from `rng`.
    """
    _logger.debug(f"building {config.family} environment")
    if config.family == "tabular":
        return make_tabular_random(
            config.num_states,
            config.num_actions,
            config.horizon,
            rng,
            stochastic_rewards=config.stochastic_rewards,
        )
    elif config.family == "linear":
        return make_linear_mdp(
            config.feature_dim or config.num_states * config.num_actions,
            config.num_states,
            config.num_actions,
            config.horizon,
            rng,
            stochastic_rewards=config.stochastic_rewards,
        )
    elif config.family == "counterexample":
        return make_counterexample(config.bonus_cap)
    elif config.family == "chain":
        return make_chain(config.num_states, config.horizon)
    raise ConfigError(f"unknown environment family {config.family!r}; expected one of {', '.join(ENV_FAMILIES)}")
