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
Link functions for generalized linear value models.

A link `f` maps an inner product `<phi(s, a), theta>` in `[-1, 1]` to a
value estimate. Every link carries declared regularity constants:

* `kappa`: a lower bound on `|f'|` over `[-1, 1]`;
* `big_k`: an upper bound on `|f'|`;
* `big_m`: an upper bound on `|f''|`.

Two links are built in, `identity` and `logistic`. User-defined links are
plain `LinkSpec` instances; `certify_bounds` checks their declarations
against a dense grid.

Example:

```python
from lsviucb.links import certify_bounds, get_link

link = get_link("logistic")
certified = certify_bounds(link)
assert link.kappa <= certified.kappa
```
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
from scipy import optimize, special

from lsviucb.errors import AssumptionViolation, ConfigError, DomainError

_logger = logging.getLogger(__name__)

ArrayOrFloat = Union[float, np.ndarray]
LinkMap = Callable[[np.ndarray], np.ndarray]

DEFAULT_GRID_POINTS = 100_000
"""
The number of uniform grid points used to certify link constants.
"""

_MIN_GRID_POINTS = 1000
_ROUND_TRIP_TOLERANCE = 1e-10


class CertifiedBounds(NamedTuple):
    """
    Link constants measured on a dense grid over `[-1, 1]`.
    """

    kappa: float
    big_k: float
    big_m: float


@dataclass(frozen=True)
class LinkSpec:
    """
    A monotone link function together with its derivatives, inverse and
    declared regularity constants.

    `LinkSpec` instances are immutable and safe to share between threads.
    """

    name: str
    """
    The link's identifier, as used in configuration (`identity`, `logistic`).
    """

    eval: LinkMap
    """
    The link itself, vectorized over `numpy` arrays.
    """

    deriv: LinkMap
    """
    The first derivative `f'`.
    """

    deriv2: LinkMap
    """
    The second derivative `f''`.
    """

    kappa: float
    """
    Declared lower bound on `|f'|` over `[-1, 1]`.
    """

    big_k: float
    """
    Declared upper bound on `|f'|` over `[-1, 1]`.
    """

    big_m: float
    """
    Declared upper bound on `|f''|` over `[-1, 1]`.
    """

    inverse: Optional[LinkMap] = None
    """
    The closed-form inverse, if any. Links without one are inverted
    numerically by `inverse_link`.
    """

    def __post_init__(self) -> None:
        """
        Validates the declared constants.
        """
        for field, value in (("kappa", self.kappa), ("big_k", self.big_k)):
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"link {self.name!r}: {field} must be positive, got {value}")
        if not (math.isfinite(self.big_m) and self.big_m >= 0):
            raise ConfigError(f"link {self.name!r}: big_m must be nonnegative, got {self.big_m}")
        # NOTE: strictly 0 < kappa < K is not required; the identity link
        # has kappa == K == 1.
        if self.kappa > self.big_k:
            raise ConfigError(
                f"link {self.name!r}: kappa ({self.kappa}) exceeds big_k ({self.big_k})"
            )

    @property
    def is_identity(self) -> bool:
        """
        Whether this is the identity link, for which constrained least squares
        has an exact solution.
        """
        return self.name == "identity"

    def range(self) -> tuple[float, float]:
        """
        Returns the closed interval `f([-1, 1])`.
        """
        lo, hi = (float(v) for v in self.eval(np.array([-1.0, 1.0])))
        return (min(lo, hi), max(lo, hi))


def _clamp(z: ArrayOrFloat) -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("link input is not finite")
    return np.clip(arr, -1.0, 1.0)


def eval_link(link: LinkSpec, z: ArrayOrFloat) -> ArrayOrFloat:
    """
    Evaluates `link` at `z`.

    Inputs outside of `[-1, 1]` are clamped to the interval first: the link
    is only defined there, and every valid inner product lies inside it up
    to floating-point drift.

    Raises `DomainError` on non-finite input.
    """
    out = link.eval(_clamp(z))
    if np.ndim(out) == 0:
        return float(out)
    return out


def inverse_link(link: LinkSpec, y: float) -> float:
    """
    Returns `z` in `[-1, 1]` with `eval_link(link, z) == y` to within `1e-10`.

    The link's closed-form inverse is used when it has one; otherwise the
    root is bracketed on `[-1, 1]` and found by bisection.

    Raises `DomainError` if `y` lies outside of the link's range.
    """
    if not math.isfinite(y):
        raise DomainError("link inverse input is not finite")

    lo, hi = link.range()
    if not (lo <= y <= hi):
        raise DomainError(f"{y} is outside of the range [{lo}, {hi}] of link {link.name!r}")

    if link.inverse is not None:
        return float(np.clip(link.inverse(np.asarray(y, dtype=float)), -1.0, 1.0))

    def residual(z: float) -> float:
        return float(link.eval(np.asarray(z))) - y

    if residual(-1.0) == 0.0:
        return -1.0
    if residual(1.0) == 0.0:
        return 1.0
    return float(optimize.bisect(residual, -1.0, 1.0, xtol=1e-14, maxiter=200))


def certify_bounds(link: LinkSpec, grid_points: int = DEFAULT_GRID_POINTS) -> CertifiedBounds:
    """
    Measures `link`'s constants on a uniform grid of `grid_points` points over
    `[-1, 1]` and checks them against the declared ones.

    Derivatives come from the link's analytic `deriv` and `deriv2`; no finite
    differences are taken.

    Raises `AssumptionViolation` if the link is not monotone on the grid, leaves
    `[-1, 1]`, fails to round-trip through its inverse, or if a declared constant
    is not a valid bound.
    """
    if grid_points < _MIN_GRID_POINTS:
        raise DomainError(f"certification needs at least {_MIN_GRID_POINTS} grid points")

    grid = np.linspace(-1.0, 1.0, grid_points)
    values = link.eval(grid)

    steps = np.diff(values)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise AssumptionViolation(f"link {link.name!r} is not strictly monotone on [-1, 1]")

    if np.abs(values).max() > 1.0:
        raise AssumptionViolation(f"link {link.name!r} leaves [-1, 1]")

    if link.inverse is not None:
        round_trip = link.inverse(values)
        if np.abs(round_trip - grid).max() > _ROUND_TRIP_TOLERANCE:
            raise AssumptionViolation(f"link {link.name!r} does not round-trip through its inverse")

    first = np.abs(link.deriv(grid))
    second = np.abs(link.deriv2(grid))
    certified = CertifiedBounds(
        kappa=float(first.min()), big_k=float(first.max()), big_m=float(second.max())
    )
    _logger.debug(f"certified link {link.name!r}: {certified}")

    if link.kappa > certified.kappa:
        raise AssumptionViolation(
            f"link {link.name!r}: declared kappa {link.kappa} exceeds measured {certified.kappa}"
        )
    if certified.big_k > link.big_k:
        raise AssumptionViolation(
            f"link {link.name!r}: measured K {certified.big_k} exceeds declared {link.big_k}"
        )
    if certified.big_m > link.big_m:
        raise AssumptionViolation(
            f"link {link.name!r}: measured M {certified.big_m} exceeds declared {link.big_m}"
        )

    return certified


def _identity(identity_m: float) -> LinkSpec:
    return LinkSpec(
        name="identity",
        eval=lambda z: np.asarray(z, dtype=float),
        deriv=lambda z: np.ones_like(np.asarray(z, dtype=float)),
        deriv2=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
        inverse=lambda y: np.asarray(y, dtype=float),
        kappa=1.0,
        big_k=1.0,
        big_m=identity_m,
    )


def _logistic_deriv(z: np.ndarray) -> np.ndarray:
    s = special.expit(z)
    return s * (1.0 - s)


def _logistic_deriv2(z: np.ndarray) -> np.ndarray:
    s = special.expit(z)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


IDENTITY = _identity(0.0)
"""
The identity link `f(z) = z`, with `kappa = K = 1` and `M = 0`.
"""

LOGISTIC = LinkSpec(
    name="logistic",
    eval=special.expit,
    deriv=_logistic_deriv,
    deriv2=_logistic_deriv2,
    inverse=special.logit,
    # |f'| is smallest at the interval's endpoints and largest at zero; |f''|
    # is increasing in |z| on [-1, 1].
    kappa=float(_logistic_deriv(np.array([-1.0, 1.0])).min()),
    big_k=0.25,
    big_m=float(np.abs(_logistic_deriv2(np.array([-1.0, 1.0]))).max()),
)
"""
The logistic link `f(z) = 1 / (1 + exp(-z))`.
"""

LINK_NAMES = ("identity", "logistic")


def get_link(name: str, *, identity_m: float = 0.0) -> LinkSpec:
    """
    Resolves a built-in link by name.

    `identity_m` overrides the identity link's declared `M`; `1.0` reproduces
    the conservative constant used when comparing against published bounds.

    Raises `ConfigError` for unknown names.
    """
    if name == "identity":
        return IDENTITY if identity_m == 0.0 else _identity(identity_m)
    if name == "logistic":
        return LOGISTIC
    raise ConfigError(f"unknown link {name!r}; expected one of {', '.join(LINK_NAMES)}")


def rescale_into_range(link: LinkSpec, values: np.ndarray, *, margin: float = 1e-3) -> np.ndarray:
    """
    Affinely maps `values` from `[0, 1]` into the interior of `link`'s range,
    leaving a `margin` on both sides.

    Used to build value tables that a bounded link can represent exactly.
    """
    lo, hi = link.range()
    width = (hi - lo) * (1.0 - 2.0 * margin)
    return lo + (hi - lo) * margin + width * np.asarray(values, dtype=float)
