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
Reading and writing of per-seed and aggregated regret tables.

Floats are written with 17 significant digits, so a parsed table holds
exactly the values that were written.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from lsviucb.agent import RunArtifacts
from lsviucb.errors import PlotError
from lsviucb.mdp import RegretLog

PathLike = Union[str, Path]

REGRET_COLUMNS = ("episode", "reward", "cumulative_regret", "gamma", "bonus_sum", "solver_converged")


def _fmt(value: float) -> str:
    return format(value, ".17g")


@dataclass(frozen=True)
class RegretTable:
    """
    The columns of a per-seed regret CSV.
    """

    rewards: Tuple[float, ...]
    cumulative_regret: Tuple[float, ...]
    gamma: Tuple[float, ...]
    bonus_sums: Tuple[float, ...]
    solver_converged: Tuple[bool, ...]


def write_regret_csv(path: PathLike, log: RegretLog, artifacts: RunArtifacts) -> None:
    """
    Writes one row per episode of a run.
    """
    regret = log.cumulative_regret
    with open(path, "w", newline="") as io:
        writer = csv.writer(io, lineterminator="\n")
        writer.writerow(REGRET_COLUMNS)
        for t, reward in enumerate(log.per_episode_reward):
            writer.writerow(
                [
                    t + 1,
                    _fmt(reward),
                    _fmt(math.nan if regret is None else float(regret[t])),
                    _fmt(artifacts.gamma),
                    _fmt(float(artifacts.bonus_sums[t])),
                    int(artifacts.solver_converged[t]),
                ]
            )


def read_regret_csv(path: PathLike) -> RegretTable:
    """
    Parses a per-seed regret CSV.
    """
    columns: Dict[str, List[str]] = {name: [] for name in REGRET_COLUMNS}
    with open(path, newline="") as io:
        reader = csv.reader(io)
        header = next(reader, None)
        if header is None or tuple(header) != REGRET_COLUMNS:
            raise PlotError(f"{path}: expected the header {','.join(REGRET_COLUMNS)}", row=1)
        for row in reader:
            if len(row) != len(REGRET_COLUMNS):
                raise PlotError(f"{path}: expected {len(REGRET_COLUMNS)} fields", row=reader.line_num)
            for name, value in zip(REGRET_COLUMNS, row):
                columns[name].append(value)

    try:
        return RegretTable(
            rewards=tuple(float(v) for v in columns["reward"]),
            cumulative_regret=tuple(float(v) for v in columns["cumulative_regret"]),
            gamma=tuple(float(v) for v in columns["gamma"]),
            bonus_sums=tuple(float(v) for v in columns["bonus_sum"]),
            solver_converged=tuple(v == "1" for v in columns["solver_converged"]),
        )
    except ValueError as e:
        raise PlotError(f"{path}: {e}") from e


@dataclass(frozen=True)
class AggregatedTable:
    """
    Mean and standard deviation of cumulative regret across seeds, per
    agent and episode.
    """

    episodes: np.ndarray
    series: Dict[str, Tuple[np.ndarray, np.ndarray]]
    """
    Agent name to `(mean, std)` arrays, in column order.
    """

    def final(self, agent: str) -> Tuple[float, float]:
        """
        The mean and standard deviation after the last episode.
        """
        mean, std = self.series[agent]
        return float(mean[-1]), float(std[-1])


def write_aggregated_csv(path: PathLike, table: AggregatedTable) -> None:
    """
    Writes `episode,<agent>_mean,<agent>_std,...`.
    """
    header = ["episode"]
    for agent in table.series:
        header += [f"{agent}_mean", f"{agent}_std"]

    with open(path, "w", newline="") as io:
        writer = csv.writer(io, lineterminator="\n")
        writer.writerow(header)
        for i, episode in enumerate(table.episodes):
            row = [str(int(episode))]
            for mean, std in table.series.values():
                row += [_fmt(float(mean[i])), _fmt(float(std[i]))]
            writer.writerow(row)


def read_aggregated_csv(path: PathLike) -> AggregatedTable:
    """
    Parses an aggregated regret CSV.

    Raises `PlotError`, carrying the offending row number, for a malformed
    header or row, and for a table without data rows.
    """
    try:
        io = open(path, newline="")
    except OSError as e:
        raise PlotError(f"unable to read {path}: {e}") from e

    with io:
        reader = csv.reader(io)
        header = next(reader, None)
        if not header or header[0] != "episode" or len(header) < 3 or len(header) % 2 != 1:
            raise PlotError("expected a header of `episode` followed by mean/std column pairs", row=1)

        agents = []
        for mean_col, std_col in zip(header[1::2], header[2::2]):
            if not mean_col.endswith("_mean") or std_col != mean_col[: -len("_mean")] + "_std":
                raise PlotError(f"unpaired columns {mean_col!r}, {std_col!r}", row=1)
            agents.append(mean_col[: -len("_mean")])

        episodes: List[int] = []
        values: List[List[float]] = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise PlotError(f"expected {len(header)} fields, got {len(row)}", row=reader.line_num)
            try:
                episodes.append(int(row[0]))
                values.append([float(v) for v in row[1:]])
            except ValueError as e:
                raise PlotError(str(e), row=reader.line_num) from e
            if not all(math.isfinite(v) for v in values[-1]):
                raise PlotError("non-finite value", row=reader.line_num)

    if not episodes:
        raise PlotError("the table has no data rows")

    data = np.array(values)
    series = {agent: (data[:, 2 * i], data[:, 2 * i + 1]) for i, agent in enumerate(agents)}
    return AggregatedTable(episodes=np.array(episodes), series=series)
