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
Norm-constrained GLM least squares, and the covariance and bonus machinery
that turns fitted parameters into optimistic estimates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize

from lsviucb._utils import as_vector, check_unit_norm, project_to_ball
from lsviucb.errors import DomainError
from lsviucb.links import LinkSpec, eval_link

_logger = logging.getLogger(__name__)

# Slack on the parameter-ball constraint after projection.
_BALL_SLACK = 1e-12


class SolverOpts(BaseModel):
    """
    Options for `fit_constrained_glm` and the covariance refresh schedule.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_iters: int = Field(default=500, ge=1)
    """
    The projected-gradient iteration cap.
    """

    tolerance: float = Field(default=1e-8, gt=0)
    """
    Projected gradient stops once an iteration moves the parameter by less
    than this.
    """

    refresh_period: int = Field(default=1000, ge=1)
    """
    `update_covariance` recomputes the inverse from scratch every
    `refresh_period` rank-one updates.
    """

    method: Literal["auto", "pgd"] = "auto"
    """
    `auto` solves identity-link problems exactly and uses projected gradient
    for every other link; `pgd` always uses projected gradient.
    """


@dataclass(frozen=True)
class GlmParams:
    """
    A fitted parameter vector and the radius of the ball it was fitted in.
    """

    theta: np.ndarray
    ball_radius: float

    def __post_init__(self) -> None:
        """
        Checks the norm constraint.
        """
        if not (math.isfinite(self.ball_radius) and self.ball_radius > 0):
            raise DomainError(f"ball radius must be positive, got {self.ball_radius}")
        norm = float(np.linalg.norm(self.theta))
        if norm > self.ball_radius + _BALL_SLACK:
            raise DomainError(f"parameter norm {norm} exceeds ball radius {self.ball_radius}")

    @classmethod
    def zeros(cls, dim: int, ball_radius: float) -> GlmParams:
        """
        The all-zero parameter.
        """
        return cls(theta=np.zeros(dim), ball_radius=ball_radius)


@dataclass(frozen=True)
class FitResult:
    """
    The outcome of `fit_constrained_glm`.
    """

    params: GlmParams
    converged: bool
    """
    `False` if projected gradient ran out of iterations; `params` then holds
    the best iterate found.
    """

    iterations: int
    objective: float


def squared_loss(theta: np.ndarray, X: np.ndarray, y: np.ndarray, link: LinkSpec) -> float:
    """
    The constrained least-squares objective `sum_i (y_i - f(<x_i, theta>))^2`.

    Inner products are clamped to `[-1, 1]` before the link is applied, the
    same map `eval_link` gives the agent's value estimates. With a ball radius
    above one they may leave the interval.
    """
    if X.shape[0] == 0:
        return 0.0
    residual = y - eval_link(link, X @ theta)
    return float(residual @ residual)


def _clamped_deriv(link: LinkSpec, z: np.ndarray) -> np.ndarray:
    """
    The derivative of `z -> eval_link(link, z)`: `f'` inside `[-1, 1]`,
    zero where the clamp is active.
    """
    inside = np.abs(z) <= 1.0
    return np.where(inside, link.deriv(np.clip(z, -1.0, 1.0)), 0.0)


def _validate_data(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise DomainError(f"covariates must be a 2-D array, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise DomainError(f"expected {X.shape[0]} targets, got shape {y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("regression data has non-finite entries")
    check_unit_norm(X, name="covariate")
    return X, y


def _solve_identity(
    X: np.ndarray, y: np.ndarray, radius: float, gram: Optional[np.ndarray]
) -> np.ndarray:
    """
    Exactly minimizes `||y - X theta||^2` over `||theta|| <= radius`.

    Inside the ball this is the minimal-norm least-squares solution; on the
    boundary it is `(G + mu I)^{-1} b` with the multiplier `mu > 0` found by a
    scalar root search.
    """
    if gram is None:
        gram = X.T @ X
    b = X.T @ y
    eigvals, eigvecs = np.linalg.eigh(gram)
    cutoff = 1e-12 * max(float(eigvals.max()), 1.0)
    keep = eigvals > cutoff
    lam, coeffs = eigvals[keep], eigvecs[:, keep].T @ b

    def solution(mu: float) -> np.ndarray:
        return np.asarray(eigvecs[:, keep] @ (coeffs / (lam + mu)))

    theta = solution(0.0)
    if np.linalg.norm(theta) <= radius:
        return theta

    def excess(mu: float) -> float:
        return float(np.linalg.norm(coeffs / (lam + mu))) - radius

    # ||theta(mu)|| <= ||b|| / mu, so the root lies below ||b|| / radius.
    upper = float(np.linalg.norm(coeffs)) / radius
    mu = optimize.brentq(excess, 0.0, upper, xtol=1e-15, rtol=1e-15, maxiter=500)
    return project_to_ball(solution(mu), radius)


def _lipschitz_constant(X: np.ndarray, y: np.ndarray, link: LinkSpec) -> float:
    """
    A Lipschitz constant of the loss gradient: the Hessian is
    `2 sum_i (f'^2 - (y_i - f) f'') x_i x_i^T`.
    """
    top = float(np.linalg.eigvalsh(X.T @ X).max()) if X.shape[0] else 0.0
    return 2.0 * top * (link.big_k**2 + link.big_m * (float(np.abs(y).max()) + 1.0))


def fit_constrained_glm(
    X: np.ndarray,
    y: np.ndarray,
    link: LinkSpec,
    radius: float = 1.0,
    opts: Optional[SolverOpts] = None,
    *,
    warm_start: Optional[np.ndarray] = None,
    gram: Optional[np.ndarray] = None,
) -> FitResult:
    """
    Minimizes `squared_loss` over the ball `||theta|| <= radius`.

    `X` holds one covariate per row (each in the unit ball) and `y` the
    matching finite targets. Empty data yields the zero vector.

    With `opts.method == "auto"`, identity-link problems are solved exactly
    (minimal-norm among minimizers). When that solution puts an inner product
    outside of `[-1, 1]`, where the clamp makes the problem differ from plain
    least squares, it only warm-starts projected gradient. Every other case
    runs projected gradient descent with step `1/L`, starting from `warm_start` (projected) or zero,
    for at most `opts.max_iters` iterations; the best iterate is returned and
    `converged` records whether the movement tolerance was reached.

    `gram` may carry a precomputed `X^T X` for the exact solver.
    """
    opts = opts or SolverOpts()
    X, y = _validate_data(X, y)
    dim = X.shape[1]

    if X.shape[0] == 0:
        return FitResult(GlmParams.zeros(dim, radius), converged=True, iterations=0, objective=0.0)

    if link.is_identity and opts.method == "auto":
        theta = _solve_identity(X, y, radius, gram)
        if np.abs(X @ theta).max() <= 1.0:
            return FitResult(
                GlmParams(theta, radius),
                converged=True,
                iterations=1,
                objective=squared_loss(theta, X, y, link),
            )
        _logger.debug("exact identity fit leaves [-1, 1]; refining under the clamp")
        warm_start = theta

    theta = np.zeros(dim) if warm_start is None else project_to_ball(as_vector(warm_start), radius)
    lipschitz = _lipschitz_constant(X, y, link)
    if lipschitz == 0.0:
        # All covariates are zero; the objective is constant.
        return FitResult(
            GlmParams(theta, radius), converged=True, iterations=0, objective=squared_loss(theta, X, y, link)
        )
    step = 1.0 / lipschitz

    best, best_objective = theta, squared_loss(theta, X, y, link)
    converged = False
    iterations = 0
    for iterations in range(1, opts.max_iters + 1):
        z = X @ theta
        gradient = -2.0 * X.T @ ((y - eval_link(link, z)) * _clamped_deriv(link, z))
        candidate = project_to_ball(theta - step * gradient, radius)
        movement = float(np.linalg.norm(candidate - theta))
        theta = candidate

        objective = squared_loss(theta, X, y, link)
        if objective < best_objective:
            best, best_objective = theta, objective
        if movement <= opts.tolerance:
            converged = True
            break

    if not converged:
        _logger.debug(f"projected gradient stopped after {iterations} iterations without converging")
    return FitResult(GlmParams(best, radius), converged=converged, iterations=iterations, objective=best_objective)


@dataclass
class DriftCounter:
    """
    Counts numerically negative quadratic forms that were clamped to zero.
    """

    clamp_events: int = 0

    def record(self, events: int = 1) -> None:
        """
        Records `events` clamps.
        """
        self.clamp_events += events


@dataclass(frozen=True)
class CovarianceState:
    """
    `Lambda = I + sum_t x_t x_t^T`, its inverse, and the number of absorbed
    covariates.
    """

    lam: np.ndarray
    lam_inv: np.ndarray
    count: int = 0

    def __post_init__(self) -> None:
        """
        Checks shapes.
        """
        if self.lam.ndim != 2 or self.lam.shape[0] != self.lam.shape[1] or self.lam.shape != self.lam_inv.shape:
            raise DomainError("covariance matrices must be square and of matching shape")

    @property
    def dim(self) -> int:
        """
        The covariate dimension.
        """
        return int(self.lam.shape[0])

    @classmethod
    def identity(cls, dim: int) -> CovarianceState:
        """
        The state before any covariate has been absorbed.
        """
        return cls(lam=np.eye(dim), lam_inv=np.eye(dim), count=0)

    @classmethod
    def from_covariates(cls, X: np.ndarray) -> CovarianceState:
        """
        Builds the state for all rows of `X` at once, inverting directly.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lam = np.eye(X.shape[1]) + X.T @ X
        return cls(lam=lam, lam_inv=np.linalg.inv(lam), count=X.shape[0])

    def refresh(self) -> CovarianceState:
        """
        Recomputes the inverse from `lam`, discarding accumulated drift.
        """
        return CovarianceState(lam=self.lam, lam_inv=np.linalg.inv(self.lam), count=self.count)

    def inverse_residual(self) -> float:
        """
        `||Lambda Lambda^{-1} - I||_F`.
        """
        return float(np.linalg.norm(self.lam @ self.lam_inv - np.eye(self.dim)))


def update_covariance(state: CovarianceState, x: np.ndarray, refresh_period: int = 1000) -> CovarianceState:
    """
    Absorbs covariate `x`: `Lambda += x x^T`, with the inverse updated by the
    Sherman-Morrison identity and recomputed from scratch every
    `refresh_period` updates.

    Raises `DomainError` on non-finite input or `||x|| > 1`.
    """
    x = as_vector(x, name="covariate")
    check_unit_norm(x)
    if x.shape != (state.dim,):
        raise DomainError(f"expected a covariate of length {state.dim}, got {x.shape[0]}")

    lam = state.lam + np.outer(x, x)
    u = state.lam_inv @ x
    lam_inv = state.lam_inv - np.outer(u, u) / (1.0 + float(x @ u))
    lam_inv = 0.5 * (lam_inv + lam_inv.T)
    updated = CovarianceState(lam=lam, lam_inv=lam_inv, count=state.count + 1)

    if updated.count % refresh_period == 0:
        _logger.debug(f"refreshing covariance inverse after {updated.count} updates")
        updated = updated.refresh()
    return updated


def mahalanobis_bonus_batch(
    state: CovarianceState, phi: np.ndarray, drift: Optional[DriftCounter] = None
) -> np.ndarray:
    """
    `sqrt(phi^T Lambda^{-1} phi)` over the last axis of `phi`.

    Quadratic forms that come out negative through rounding are clamped to
    zero, one `drift` event each.
    """
    phi = np.asarray(phi, dtype=float)
    quad = np.sum((phi @ state.lam_inv) * phi, axis=-1)
    negative = quad < 0
    if np.any(negative):
        events = int(np.count_nonzero(negative))
        _logger.debug(f"clamping {events} negative quadratic form(s)")
        if drift is not None:
            drift.record(events)
        quad = np.where(negative, 0.0, quad)
    return np.sqrt(quad)


def mahalanobis_bonus(state: CovarianceState, phi: np.ndarray, drift: Optional[DriftCounter] = None) -> float:
    """
    `||phi||_{Lambda^{-1}} = sqrt(phi^T Lambda^{-1} phi)`, in `[0, 1]` for
    `||phi|| <= 1`.
    """
    phi = as_vector(phi, name="feature")
    check_unit_norm(phi, name="feature")
    return float(mahalanobis_bonus_batch(state, phi, drift))
