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
Shared utilities.
"""

from __future__ import annotations

import sys
from typing import Any, List, Sequence

import numpy as np
import rfc8785
from pydantic import BaseModel

from lsviucb.errors import DomainError

if sys.version_info < (3, 11):
    import importlib_resources as resources
else:
    from importlib import resources


# Slack for norm constraints of covariates that went through float arithmetic.
_NORM_SLACK = 1e-9


def spawn_streams(seed: int | np.random.SeedSequence, n: int) -> List[np.random.SeedSequence]:
    """
    Splits `seed` into `n` independent child seed sequences.

    Children depend only on `seed` and their position, so a run's random
    streams are reproducible regardless of how runs are scheduled.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(n)


def generator(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """
    Returns a fresh `Generator` for `seed`.
    """
    return np.random.default_rng(seed)


def as_vector(x: Any, *, name: str = "vector") -> np.ndarray:
    """
    Coerces `x` into a finite 1-D float array, raising `DomainError` otherwise.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def check_unit_norm(x: np.ndarray, *, name: str = "covariate") -> None:
    """
    Raises `DomainError` unless every row of `x` (or `x` itself) lies in the
    closed unit ball.
    """
    norms = np.linalg.norm(np.atleast_2d(x), axis=-1)
    if norms.size and norms.max() > 1.0 + _NORM_SLACK:
        raise DomainError(f"{name} norm {norms.max():.6g} exceeds 1")


def sample_unit_ball(rng: np.random.Generator, dim: int, size: int) -> np.ndarray:
    """
    Draws `size` points uniformly from the closed unit ball in `dim` dimensions.
    """
    directions = rng.standard_normal((size, dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    # A zero draw has probability zero, but don't divide by it.
    norms[norms == 0.0] = 1.0
    radii = rng.uniform(size=(size, 1)) ** (1.0 / dim)
    return directions / norms * radii


def project_to_ball(theta: np.ndarray, radius: float) -> np.ndarray:
    """
    Euclidean projection of `theta` onto the ball of the given `radius`.
    """
    norm = float(np.linalg.norm(theta))
    if norm <= radius:
        return theta
    return theta * (radius / norm)


def mean_and_stderr(values: Sequence[float]) -> tuple[float, float]:
    """
    Returns the sample mean of `values` and its standard error (zero for a
    single value).
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise DomainError("cannot average an empty sample")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))


def canonical_json(model: BaseModel) -> bytes:
    """
    Serializes `model` as canonical (RFC 8785) JSON, so that equal contents
    always produce identical bytes.
    """
    return rfc8785.dumps(model.model_dump(mode="json"))


def read_embedded(name: str) -> bytes:
    """
    Read a resource embedded in this distribution of lsviucb,
    returning its contents as bytes.
    """
    b: bytes = resources.files("lsviucb._store").joinpath(name).read_bytes()
    return b


def list_embedded(suffix: str = ".cfg") -> List[str]:
    """
    Lists the names of embedded resources ending with `suffix`.
    """
    return sorted(
        entry.name
        for entry in resources.files("lsviucb._store").iterdir()
        if entry.name.endswith(suffix)
    )
