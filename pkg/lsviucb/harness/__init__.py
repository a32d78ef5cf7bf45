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
Config-driven experiments: seed sweeps, baseline comparisons, CSV and JSON
outputs, and SVG regret plots.
"""

from lsviucb.harness._csv import (
    AggregatedTable,
    RegretTable,
    read_aggregated_csv,
    read_regret_csv,
    write_aggregated_csv,
    write_regret_csv,
)
from lsviucb.harness._svg import emit_plot, plot_bounds, render_svg
from lsviucb.harness.config import AgentConfig, EnvConfig, ExperimentConfig, load_config
from lsviucb.harness.runner import (
    ExperimentOutcome,
    aggregate,
    compare_baselines,
    diagnose_run,
    loglog_slope,
    run_experiment,
)

__all__ = [
    "AgentConfig",
    "AggregatedTable",
    "EnvConfig",
    "ExperimentConfig",
    "ExperimentOutcome",
    "RegretTable",
    "aggregate",
    "compare_baselines",
    "diagnose_run",
    "emit_plot",
    "load_config",
    "loglog_slope",
    "plot_bounds",
    "read_aggregated_csv",
    "read_regret_csv",
    "render_svg",
    "run_experiment",
    "write_aggregated_csv",
    "write_regret_csv",
]
