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
Experiment configuration.

Configurations are flat `key = value` text files. Keys may be dotted to
reach nested sections (`env.num_states = 4`, `agent.solver.max_iters = 200`),
`#` starts a comment, and list values are comma separated. Seed lists also
accept inclusive ranges (`seeds = 0..9`).

Presets shipped with the package are loaded with `preset:<name>`.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from lsviucb._utils import list_embedded, read_embedded
from lsviucb.errors import ConfigError
from lsviucb.regression import SolverOpts

_logger = logging.getLogger(__name__)

PRESET_PREFIX = "preset:"

BaselineName = Literal["random", "eps_greedy"]


class _ConfigBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class EnvConfig(_ConfigBase):
    """
    The environment family and its parameters. Keys a family does not use
    are ignored by it.
    """

    family: Literal["tabular", "linear", "counterexample", "chain"] = "tabular"
    num_states: int = Field(default=3, ge=1)
    num_actions: int = Field(default=2, ge=1)
    horizon: int = Field(default=3, ge=1)
    feature_dim: Optional[int] = Field(default=None, ge=1)
    """
    The linear MDP's feature dimension; defaults to `num_states * num_actions`.
    """

    bonus_cap: float = Field(default=1.0, gt=0)
    """
    The counterexample's `Gamma`.
    """

    stochastic_rewards: bool = False


class AgentConfig(_ConfigBase):
    """
    Settings shared by the optimistic agent and the baselines.
    """

    link: Literal["identity", "logistic"] = "identity"
    identity_m: float = Field(default=0.0, ge=0)
    """
    The identity link's declared `M`; `1` matches the conservative constant.
    """

    gamma_scale: float = Field(default=1.0, ge=0)
    """
    The multiplier `C` of the confidence width.
    """

    bonus_cap: Optional[float] = Field(default=None, gt=0)
    """
    An explicit `Gamma`; unset selects the one-shot default.
    """

    ball_radius: Union[float, Literal["auto"]] = 1.0
    """
    The parameter-ball radius `B`; `auto` selects `sqrt(d)`.
    """

    solver: SolverOpts = SolverOpts()
    refit_every: int = Field(default=1, ge=1)
    epsilon: float = Field(default=0.1, ge=0, le=1)
    """
    The exploration rate of the `eps_greedy` baseline.
    """

    @field_validator("ball_radius")
    @classmethod
    def _positive_radius(cls, value: Union[float, str]) -> Union[float, str]:
        if isinstance(value, float) and not value > 0:
            raise ValueError("ball_radius must be positive")
        return value

    def resolve_ball_radius(self, feature_dim: int) -> float:
        """
        The radius to fit in for a feature dimension of `feature_dim`.
        """
        if self.ball_radius == "auto":
            return math.sqrt(feature_dim)
        return float(self.ball_radius)


def _split(value: Any) -> Any:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


def parse_seeds(value: Any) -> Tuple[int, ...]:
    """
    Parses `3`, `0,2,5`, `0..9` (inclusive) or any mix of them.
    """
    if isinstance(value, int):
        return (value,)
    seeds = []
    for part in _split(value):
        if isinstance(part, int):
            seeds.append(part)
        elif ".." in part:
            lo, _, hi = part.partition("..")
            try:
                start, stop = int(lo), int(hi)
            except ValueError:
                raise ValueError(f"invalid seed range {part!r}") from None
            if stop < start:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(start, stop + 1))
        else:
            try:
                seeds.append(int(part))
            except ValueError:
                raise ValueError(f"invalid seed {part!r}") from None
    return tuple(seeds)


class ExperimentConfig(_ConfigBase):
    """
    A complete experiment: environment, agent settings, episode count, seeds
    and baselines.
    """

    env: EnvConfig = EnvConfig()
    agent: AgentConfig = AgentConfig()
    episodes: int = Field(default=1000, ge=1)
    seeds: Tuple[int, ...] = (0,)
    baselines: Tuple[BaselineName, ...] = ()
    out: Optional[Path] = None
    workers: int = Field(default=1, ge=1)

    @field_validator("seeds", mode="before")
    @classmethod
    def _parse_seeds(cls, value: Any) -> Tuple[int, ...]:
        return parse_seeds(value)

    @field_validator("seeds")
    @classmethod
    def _seeds_nonempty(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value:
            raise ValueError("at least one seed is required")
        if len(set(value)) != len(value):
            raise ValueError("seeds must be distinct")
        return value

    @field_validator("baselines", mode="before")
    @classmethod
    def _parse_baselines(cls, value: Any) -> Any:
        return _split(value)

    @property
    def agents(self) -> Tuple[str, ...]:
        """
        Every agent an experiment runs, the optimistic agent first.
        """
        return ("lsvi_ucb", *self.baselines)


def parse_flat(text: str, *, source: str = "<config>") -> Dict[str, str]:
    """
    Parses `key = value` lines into a flat mapping of dotted keys to raw
    string values.
    """
    entries: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected `key = value`, got {line!r}")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = value.strip()
    return entries


def _nest(flat: Mapping[str, Any]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for dotted, value in flat.items():
        *parents, leaf = dotted.split(".")
        node = nested
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"key {dotted!r} conflicts with the scalar key {part!r}")
            node = child
        if isinstance(node.get(leaf), dict):
            raise ConfigError(f"key {dotted!r} conflicts with a section of the same name")
        node[leaf] = value
    return nested


def _read_source(source: str) -> str:
    if source.startswith(PRESET_PREFIX):
        name = source[len(PRESET_PREFIX) :]
        available = [entry[: -len(".cfg")] for entry in list_embedded(".cfg")]
        if name not in available:
            raise ConfigError(f"unknown preset {name!r}; available presets: {', '.join(available)}")
        return read_embedded(f"{name}.cfg").decode()

    try:
        return Path(source).read_text()
    except OSError as e:
        raise ConfigError(f"unable to read configuration file {source}: {e}") from e


def load_config(
    source: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    *,
    defaults: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """
    Builds an `ExperimentConfig` from a configuration file or preset and
    dotted-key overrides. Overrides take precedence over the file, the file over
    `defaults`, and `defaults` over the model defaults; `None` values in
    `overrides` and `defaults` are ignored.

    Raises `ConfigError` for unreadable sources, malformed lines, unknown
    keys or invalid values.
    """
    flat: Dict[str, Any] = {k: v for k, v in (defaults or {}).items() if v is not None}
    if source is not None:
        flat.update(parse_flat(_read_source(source), source=source))
        _logger.debug(f"loaded {len(flat)} configuration key(s) from {source}")
    for key, value in (overrides or {}).items():
        if value is not None:
            flat[key] = value

    try:
        return ExperimentConfig.model_validate(_nest(flat))
    except ValidationError as e:
        raise ConfigError(str(e)) from e
