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
Executable checks of the guarantees behind optimistic value iteration:
optimism of the estimates, the elliptical potential bound, the link
sandwich inequality, optimistic closure of the counterexample, the regret
decomposition and per-step confidence widths.

Checks that can only fail through a bug or a misdeclared constant raise an
`InvariantError` subclass; statistical checks return counts and leave the
verdict to the caller.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import stats

from lsviucb._utils import mean_and_stderr, sample_unit_ball
from lsviucb.agent import OPTIMISM_TOLERANCE, Agent, LsviUcbAgent, RunArtifacts, run_episodes
from lsviucb.environments import CounterexampleMdp
from lsviucb.errors import (
    ClosureViolation,
    DomainError,
    LemmaViolation,
    PotentialViolation,
)
from lsviucb.links import LinkSpec, eval_link
from lsviucb.mdp import EnumerableMdp, EpisodicMdp, TabularQStar
from lsviucb.regression import mahalanobis_bonus_batch

_logger = logging.getLogger(__name__)

LEMMA_SLACK = 1e-10
CLOSURE_TOLERANCE = 1e-9


class OptimismSummary(NamedTuple):
    """
    Counts of optimism checks and violations, and the largest shortfall.
    """

    checks: int
    violations: int
    max_magnitude: float


class PotentialSummary(NamedTuple):
    """
    Per-step sums of squared covariance norms and their analytic bound.
    """

    sums: List[float]
    bound: float


class DecompositionSummary(NamedTuple):
    """
    The mean per-episode regret-decomposition gap and its standard error
    across seeds.
    """

    gap: float
    stderr: float


class WidthSummary(NamedTuple):
    """
    Counts of confidence-width checks and violations.
    """

    checks: int
    violations: int


class DiagnosticsReport(BaseModel):
    """
    The diagnostics of an experiment, serialized next to its outputs.
    """

    model_config = ConfigDict(frozen=True)

    optimism_checks: int = Field(ge=0)
    optimism_violations: int = Field(ge=0)
    max_violation_magnitude: float = Field(ge=0)
    potential_sums: List[float]
    potential_bound: float
    closure_max_residual: Optional[float] = None
    decomposition_gap: Optional[float] = None
    decomposition_stderr: Optional[float] = None
    skipped: List[str] = []
    """
    Checks that could not run, with the reason.
    """

    @model_validator(mode="after")
    def check_counts(self) -> DiagnosticsReport:
        """
        Violations never exceed checks, and every potential sum respects
        its bound.
        """
        if self.optimism_violations > self.optimism_checks:
            raise ValueError("optimism violations exceed the number of checks")
        for h, total in enumerate(self.potential_sums):
            if total > self.potential_bound:
                raise PotentialViolation(
                    f"step {h}: potential sum {total} exceeds the bound {self.potential_bound}"
                )
        return self

    @property
    def optimism_violation_rate(self) -> float:
        """
        The fraction of optimism checks that failed.
        """
        return self.optimism_violations / self.optimism_checks if self.optimism_checks else 0.0


def check_optimism(artifacts: RunArtifacts, tolerance: float = OPTIMISM_TOLERANCE) -> Optional[OptimismSummary]:
    """
    Compares, at every visited `(t, h)`, the estimate the agent acted on
    against `Q*`, counting shortfalls beyond `tolerance`.

    Returns `None`, with a warning, when the run had no oracle.
    """
    checked = np.isfinite(artifacts.qstar) & np.isfinite(artifacts.qbar)
    if not checked.any():
        _logger.warning("no exact Q* values in the run artifacts; skipping the optimism check")
        return None

    shortfall = np.where(checked, artifacts.qstar - artifacts.qbar, 0.0)
    violations = shortfall > tolerance
    magnitude = float(shortfall[violations].max()) if violations.any() else 0.0
    return OptimismSummary(int(checked.sum()), int(violations.sum()), magnitude)


def exhaustive_optimism_sweep(
    agent: LsviUcbAgent, env: EnumerableMdp, tolerance: float = OPTIMISM_TOLERANCE
) -> OptimismSummary:
    """
    Compares the agent's current estimates with `Q*` at every `(h, s, a)` of a
    small enumerable environment.
    """
    oracle: TabularQStar = env.exact_oracle()
    estimates = np.stack(
        [
            np.stack([agent.action_values(h, s) for s in range(env.num_states)])
            for h in range(env.horizon)
        ]
    )
    shortfall = oracle.q - estimates
    violations = shortfall > tolerance
    magnitude = float(shortfall[violations].max()) if violations.any() else 0.0
    return OptimismSummary(int(shortfall.size), int(violations.sum()), magnitude)


def potential_bound(feature_dim: int, episodes: int) -> float:
    """
    `2 d ln(1 + T/d)`.
    """
    return 2.0 * feature_dim * math.log(1.0 + episodes / feature_dim)


def elliptical_potential_sum(features: np.ndarray) -> PotentialSummary:
    """
    Recomputes `sum_t ||phi_{h,t}||^2_{Lambda_{h,t-1}^{-1}}` for every step
    `h` from the visited features alone, shape `(T, H, d)`, with each
    `Lambda` built from scratch.

    Raises `PotentialViolation` if any sum exceeds `2 d ln(1 + T/d)`; the
    inequality is deterministic and checked without tolerance.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 3:
        raise DomainError(f"expected features of shape (T, H, d), got {features.shape}")
    episodes, horizon, dim = features.shape
    bound = potential_bound(dim, episodes)

    sums = []
    for h in range(horizon):
        lam = np.eye(dim)
        total = 0.0
        for phi in features[:, h]:
            total += float(phi @ np.linalg.solve(lam, phi))
            lam += np.outer(phi, phi)
        if total > bound:
            raise PotentialViolation(f"step {h}: potential sum {total} exceeds the bound {bound}")
        sums.append(total)
    return PotentialSummary(sums, bound)


def lemma_delta_check(
    link: LinkSpec,
    num_samples: int = 10_000,
    *,
    dim: int = 5,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Samples `(theta, theta', x)` from the unit ball and checks
    `kappa^2 <x, theta' - theta>^2 <= (f(<x, theta'>) - f(<x, theta>))^2 <= K^2 ||theta' - theta||^2`
    with the link's declared constants.

    Returns the worst slack (positive means a violation) and raises
    `LemmaViolation` if it exceeds `1e-10`.
    """
    if num_samples < 1:
        raise DomainError("lemma check needs at least one sample")
    rng = rng or np.random.default_rng()

    theta = sample_unit_ball(rng, dim, num_samples)
    theta_prime = sample_unit_ball(rng, dim, num_samples)
    x = sample_unit_ball(rng, dim, num_samples)

    delta = theta_prime - theta
    moved = (eval_link(link, np.sum(x * theta_prime, axis=1)) - eval_link(link, np.sum(x * theta, axis=1))) ** 2
    lower = link.kappa**2 * np.sum(x * delta, axis=1) ** 2
    upper = link.big_k**2 * np.sum(delta * delta, axis=1)

    worst = float(max((lower - moved).max(), (moved - upper).max()))
    if worst > LEMMA_SLACK:
        raise LemmaViolation(f"link {link.name!r}: sandwich inequality violated by {worst:.3g}")
    return worst


def random_contraction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """
    A random PSD matrix `U^T D U` with `U` uniformly orthogonal and
    `D ~ Uniform[0, 1]^d` on the diagonal, so its operator norm is at most 1.
    """
    u = stats.ortho_group.rvs(dim, random_state=rng) if dim > 1 else np.ones((1, 1))
    return np.asarray(u.T @ np.diag(rng.uniform(0.0, 1.0, size=dim)) @ u)


def closure_residual(
    env: CounterexampleMdp,
    num_test_functions: int = 100,
    alpha_grid_size: int = 101,
    *,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Draws `num_test_functions` bonus-augmented functions (random `theta` in
    the unit ball, `gamma ~ Uniform[0, Gamma]`, random contraction `A`),
    backs each up exactly through the counterexample on an `alpha` grid, and
    fits a line through the origin.

    Returns the largest residual; raises `ClosureViolation` above `1e-9`.
    """
    if not isinstance(env, CounterexampleMdp):
        raise DomainError("closure residuals are defined on the counterexample environment")
    rng = rng or np.random.default_rng()
    alphas = np.linspace(0.0, 1.0, alpha_grid_size)

    worst = 0.0
    for _ in range(num_test_functions):
        theta = sample_unit_ball(rng, env.feature_dim, 1)[0]
        gamma = float(rng.uniform(0.0, env.bonus_cap))
        a_matrix = random_contraction(rng, env.feature_dim)

        backup = env.backup(alphas, theta, gamma, a_matrix)
        slope = float(alphas @ backup) / float(alphas @ alphas)
        worst = max(worst, float(np.abs(backup - slope * alphas).max()))

    if worst > CLOSURE_TOLERANCE:
        raise ClosureViolation(f"backup deviates from linearity by {worst:.3g}")
    return worst


def decomposition_gap(runs: Sequence[RunArtifacts]) -> Optional[DecompositionSummary]:
    """
    Averages `(V* - reward_t) - bonus_sum_t` over each run's episodes, then
    across runs.

    Returns `None`, with a warning, when the runs have no `V*`.
    """
    gaps = []
    for artifacts in runs:
        if artifacts.v_star is None:
            _logger.warning("run has no V*; skipping the regret decomposition")
            return None
        gaps.append(float(np.mean(artifacts.v_star - artifacts.rewards - artifacts.bonus_sums)))
    gap, stderr = mean_and_stderr(gaps)
    return DecompositionSummary(gap, stderr)


def regret_decomposition_check(
    env: EpisodicMdp,
    agent_factory: Callable[[EpisodicMdp], Agent],
    episodes: int,
    seeds: Sequence[int],
) -> Optional[DecompositionSummary]:
    """
    Runs a fresh agent from `agent_factory` for every seed and summarizes the
    regret decomposition gap across seeds. Under optimism the gap is
    nonpositive in expectation.

    Returns `None`, with a warning, for environments without an oracle.
    """
    if env.exact_oracle() is None:
        _logger.warning(f"{type(env).__name__} has no exact oracle; skipping the regret decomposition")
        return None
    runs = [run_episodes(env, agent_factory(env), episodes, seed).artifacts for seed in seeds]
    return decomposition_gap(runs)


def confidence_width_check(agent: LsviUcbAgent, env: EnumerableMdp) -> WidthSummary:
    """
    At every `(h, s, a)` the agent has visited, checks
    `|f(<phi, theta_h>) - T_h(Q_{h+1})(s, a)| <= min{2, gamma ||phi||_{Lambda_h^{-1}}}`,
    where `T_h` is the exact Bellman operator of `env` and `Q_{h+1}` the
    agent's current estimate at the next step (zero after the last step).
    """
    checks = violations = 0
    for h in range(env.horizon):
        q = agent.q_function(h)
        if q is None:
            continue

        if h == env.horizon - 1:
            next_values = np.zeros(env.num_states)
        else:
            next_values = np.array([agent.action_values(h + 1, s).max() for s in range(env.num_states)])
        backup = env.bellman_backup(h, next_values)

        visited = {tuple(phi) for phi in agent.replay_features(h)}
        for s in range(env.num_states):
            for a in range(env.num_actions):
                phi = env.feature_table[s, a]
                if tuple(phi) not in visited:
                    continue
                fitted = float(eval_link(q.link, phi @ q.theta))
                width = min(2.0, q.gamma * float(mahalanobis_bonus_batch(q.cov, phi)))
                checks += 1
                if abs(fitted - backup[s, a]) > width:
                    violations += 1
    return WidthSummary(checks, violations)


def build_report(
    runs: Sequence[RunArtifacts],
    *,
    closure_max_residual: Optional[float] = None,
    skipped: Sequence[str] = (),
) -> DiagnosticsReport:
    """
    Derives a `DiagnosticsReport` from the artifacts of one or more runs of
    the same configuration. Potential sums are the largest over runs.
    """
    if not runs:
        raise DomainError("a diagnostics report needs at least one run")
    notes = list(skipped)

    checks = violations = 0
    magnitude = 0.0
    for artifacts in runs:
        optimism = check_optimism(artifacts)
        if optimism is None:
            continue
        checks += optimism.checks
        violations += optimism.violations
        magnitude = max(magnitude, optimism.max_magnitude)
    if checks == 0:
        notes.append("optimism: no exact Q* values available")

    potentials = [elliptical_potential_sum(artifacts.features) for artifacts in runs]
    sums = np.max([p.sums for p in potentials], axis=0).tolist()

    decomposition = decomposition_gap(runs)
    if decomposition is None:
        notes.append("decomposition: no V* available")

    report = DiagnosticsReport(
        optimism_checks=checks,
        optimism_violations=violations,
        max_violation_magnitude=magnitude,
        potential_sums=sums,
        potential_bound=potentials[0].bound,
        closure_max_residual=closure_max_residual,
        decomposition_gap=None if decomposition is None else decomposition.gap,
        decomposition_stderr=None if decomposition is None else decomposition.stderr,
        skipped=notes,
    )
    if report.optimism_violation_rate > 0.01:
        _logger.warning(
            f"optimism violated at {violations} of {checks} visited pairs "
            f"({100 * report.optimism_violation_rate:.2f}%)"
        )
    return report
