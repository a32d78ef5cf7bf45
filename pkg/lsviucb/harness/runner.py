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
Experiment execution: seed sweeps, baseline comparisons, output files and
re-derivation of diagnostics from stored artifacts.

An output directory holds:

* `<agent>-seed<k>.csv`: one row per episode of every run
* `aggregated.csv`: mean and standard deviation of cumulative regret across
  seeds, per agent
* `artifacts-seed<k>.npz`: the optimistic agent's per-episode artifacts
* `metadata.json`: the configuration and the metadata of every run
* `diagnostics.json`: the `DiagnosticsReport` of the optimistic agent's runs
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError
from rich.table import Table

from lsviucb import __version__
from lsviucb._utils import canonical_json, generator, spawn_streams
from lsviucb.agent import (
    Agent,
    EpsGreedyAgent,
    GammaParams,
    LsviUcbAgent,
    RandomAgent,
    RunArtifacts,
    RunMetadata,
    RunResult,
    resolve_gamma,
    run_episodes,
)
from lsviucb.diagnostics import DiagnosticsReport, build_report, closure_residual
from lsviucb.environments import make_environment
from lsviucb.errors import ConfigError, DomainError, OutputError
from lsviucb.harness._csv import AggregatedTable, write_aggregated_csv, write_regret_csv
from lsviucb.harness.config import ExperimentConfig
from lsviucb.links import get_link
from lsviucb.mdp import EpisodicMdp

_logger = logging.getLogger(__name__)

AGGREGATED_CSV = "aggregated.csv"
METADATA_JSON = "metadata.json"
DIAGNOSTICS_JSON = "diagnostics.json"

# Child streams of a seed: 0 drives the episodes, 1 builds the environment,
# 2 draws the closure test functions.
_ENV_STREAM = 1
_CLOSURE_STREAM = 2
_NUM_STREAMS = 3

Comparison = Dict[str, Tuple[float, float]]


def regret_csv_name(agent: str, seed: int) -> str:
    """
    The file name of a run's per-episode CSV.
    """
    return f"{agent}-seed{seed}.csv"


def artifacts_name(seed: int) -> str:
    """
    The file name of the optimistic agent's artifacts for `seed`.
    """
    return f"artifacts-seed{seed}.npz"


class ExperimentMetadata(BaseModel):
    """
    The configuration of an experiment and the metadata of all its runs.
    """

    model_config = ConfigDict(frozen=True)

    version: str
    config: ExperimentConfig
    runs: List[RunMetadata]


@dataclass(frozen=True)
class ExperimentOutcome:
    """
    The in-memory results of `run_experiment`.
    """

    config: ExperimentConfig
    runs: Dict[str, List[RunResult]]
    """
    Agent name to its runs, in seed order.
    """

    aggregated: AggregatedTable
    report: DiagnosticsReport
    out: Path

    def comparison(self) -> Comparison:
        """
        The final cumulative regret of every agent, as `(mean, std)` across
        seeds.
        """
        return {agent: self.aggregated.final(agent) for agent in self.aggregated.series}


def build_environment(config: ExperimentConfig, seed: int) -> EpisodicMdp:
    """
    The environment of `seed`; every agent run on `seed` sees the same one.
    """
    streams = spawn_streams(seed, _NUM_STREAMS)
    return make_environment(config.env, generator(streams[_ENV_STREAM]))


def build_agent(config: ExperimentConfig, name: str, env: EpisodicMdp) -> Agent:
    """
    Builds the agent called `name` for `env` from `config.agent`.

    Raises `ConfigError` for unknown names and for a confidence width above
    an explicit bonus cap.
    """
    settings = config.agent
    if name == "random":
        return RandomAgent(env.num_actions)

    link = get_link(settings.link, identity_m=settings.identity_m)
    shared = dict(
        link=link,
        ball_radius=settings.resolve_ball_radius(env.feature_dim),
        solver_opts=settings.solver,
        refit_every=settings.refit_every,
    )
    if name == "eps_greedy":
        return EpsGreedyAgent.for_env(env, epsilon=settings.epsilon, **shared)
    if name == "lsvi_ucb":
        params = GammaParams.for_link(
            link,
            scale=settings.gamma_scale,
            feature_dim=env.feature_dim,
            episodes=config.episodes,
            horizon=env.horizon,
            bonus_cap=settings.bonus_cap,
        )
        gamma, cap = resolve_gamma(params)
        return LsviUcbAgent.for_env(env, gamma=gamma, bonus_cap=cap, **shared)
    raise ConfigError(f"unknown agent {name!r}")


def run_seed(config: ExperimentConfig, agent: str, seed: int) -> RunResult:
    """
    One run of `agent` for `config.episodes` episodes on the environment of
    `seed`.
    """
    env = build_environment(config, seed)
    gamma_scale = config.agent.gamma_scale if agent == "lsvi_ucb" else None
    result = run_episodes(
        env, build_agent(config, agent, env), config.episodes, seed, gamma_scale=gamma_scale
    )
    _logger.info(f"{agent} seed {seed}: final regret {result.metadata.final_regret}")
    return result


def _run_task(task: Tuple[ExperimentConfig, str, int]) -> RunResult:
    return run_seed(*task)


def _prepare_output(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"unable to create the output directory {out}") from e
    if not os.access(out, os.W_OK):
        raise OutputError(f"the output directory {out} is not writable")


def aggregate(logs: Dict[str, Sequence[RunResult]]) -> AggregatedTable:
    """
    Mean and population standard deviation of cumulative regret across
    seeds, per agent and episode.

    Raises `DomainError` for runs without `V*` or of different lengths.
    """
    episodes: Optional[int] = None
    series = {}
    for agent, runs in logs.items():
        curves = []
        for run in runs:
            regret = run.log.cumulative_regret
            if regret is None:
                raise DomainError(f"{agent}: cumulative regret needs V*")
            if episodes is not None and regret.size != episodes:
                raise DomainError(f"{agent}: runs of different lengths cannot be aggregated")
            episodes = regret.size
            curves.append(regret)
        stacked = np.stack(curves)
        series[agent] = (stacked.mean(axis=0), stacked.std(axis=0))

    if episodes is None:
        raise DomainError("nothing to aggregate")
    return AggregatedTable(episodes=np.arange(1, episodes + 1), series=series)


def _diagnose(
    config: ExperimentConfig, artifacts: Sequence[RunArtifacts]
) -> DiagnosticsReport:
    closure = None
    skipped = []
    if config.env.family == "counterexample":
        env = build_environment(config, config.seeds[0])
        rng = generator(spawn_streams(config.seeds[0], _NUM_STREAMS)[_CLOSURE_STREAM])
        closure = closure_residual(env, rng=rng)  # type: ignore[arg-type]
    else:
        skipped.append("closure: only defined on the counterexample")
    return build_report(artifacts, closure_max_residual=closure, skipped=skipped)


def run_experiment(config: ExperimentConfig) -> ExperimentOutcome:
    """
    Runs every agent of `config` on every seed and writes the output files.

    Raises `OutputError` before any computation when the output directory
    cannot be written.
    """
    if config.out is None:
        raise ConfigError("no output directory configured")
    out = config.out
    _prepare_output(out)

    tasks = [(config, agent, seed) for agent in config.agents for seed in config.seeds]
    _logger.info(
        f"running {len(config.agents)} agent(s) on {len(config.seeds)} seed(s), "
        f"{config.episodes} episode(s) each"
    )
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(task) for task in tasks]

    runs: Dict[str, List[RunResult]] = {agent: [] for agent in config.agents}
    for (_, agent, _), result in zip(tasks, results):
        runs[agent].append(result)

    aggregated = aggregate(runs)
    report = _diagnose(config, [result.artifacts for result in runs["lsvi_ucb"]])
    metadata = ExperimentMetadata(
        version=__version__,
        config=config,
        runs=[result.metadata for result in results],
    )

    try:
        for agent, agent_runs in runs.items():
            for seed, result in zip(config.seeds, agent_runs):
                write_regret_csv(out / regret_csv_name(agent, seed), result.log, result.artifacts)
        for seed, result in zip(config.seeds, runs["lsvi_ucb"]):
            result.artifacts.save(out / artifacts_name(seed))
        write_aggregated_csv(out / AGGREGATED_CSV, aggregated)
        (out / METADATA_JSON).write_bytes(canonical_json(metadata))
        (out / DIAGNOSTICS_JSON).write_bytes(canonical_json(report))
    except OSError as e:
        raise OutputError(f"unable to write results to {out}") from e

    _logger.info(f"wrote results to {out}")
    return ExperimentOutcome(config=config, runs=runs, aggregated=aggregated, report=report, out=out)


def compare_baselines(config: ExperimentConfig) -> Comparison:
    """
    Runs `config` through `run_experiment`, writing all of its outputs to
    `config.out`, and returns the final cumulative regret of the optimistic
    agent and of every baseline.

    Raises `ConfigError` unless at least one baseline is configured.
    """
    if not config.baselines:
        raise ConfigError("a comparison needs at least one baseline")
    return run_experiment(config).comparison()


def render_comparison(comparison: Comparison, *, title: str = "final cumulative regret") -> Table:
    """
    Renders a comparison as a `rich` table.
    """
    table = Table(title=title)
    table.add_column("agent")
    table.add_column("mean", justify="right")
    table.add_column("std", justify="right")
    for agent, (mean, std) in comparison.items():
        table.add_row(agent, f"{mean:.4f}", f"{std:.4f}")
    return table


def loglog_slope(
    episodes: np.ndarray, regret: np.ndarray, lo: int = 500, hi: int = 2000
) -> float:
    """
    The least-squares slope of `log(regret)` against `log(episode)` over
    episodes in `[lo, hi]` with positive regret.

    Raises `DomainError` with fewer than two such points.
    """
    episodes = np.asarray(episodes, dtype=float)
    regret = np.asarray(regret, dtype=float)
    mask = (episodes >= lo) & (episodes <= hi) & (regret > 0)
    if mask.sum() < 2:
        raise DomainError(f"fewer than two positive regret values in episodes [{lo}, {hi}]")
    slope, _ = np.polyfit(np.log(episodes[mask]), np.log(regret[mask]), 1)
    return float(slope)


def load_metadata(run_dir: Union[str, Path]) -> ExperimentMetadata:
    """
    Reads the `metadata.json` of an output directory.
    """
    path = Path(run_dir) / METADATA_JSON
    try:
        return ExperimentMetadata.model_validate_json(path.read_bytes())
    except OSError as e:
        raise ConfigError(f"unable to read {path}: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"malformed {path}: {e}") from e


def diagnose_run(run_dir: Union[str, Path]) -> DiagnosticsReport:
    """
    Re-derives the `DiagnosticsReport` of an output directory from its
    stored artifacts, warning if it differs from the stored report.
    """
    run_dir = Path(run_dir)
    config = load_metadata(run_dir).config

    artifacts = []
    for seed in config.seeds:
        path = run_dir / artifacts_name(seed)
        try:
            artifacts.append(RunArtifacts.load(path))
        except OSError as e:
            raise ConfigError(f"unable to read {path}: {e}") from e
    report = _diagnose(config, artifacts)

    stored = run_dir / DIAGNOSTICS_JSON
    if stored.is_file() and stored.read_bytes() != canonical_json(report):
        _logger.warning(f"{stored} differs from the report derived from the artifacts")
    return report

