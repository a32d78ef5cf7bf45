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

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, NoReturn, Optional

import platformdirs
from rich.console import Console
from rich.logging import RichHandler

from lsviucb import __version__
from lsviucb._utils import canonical_json
from lsviucb.environments import ENV_FAMILIES
from lsviucb.errors import Error
from lsviucb.harness import compare_baselines, diagnose_run, emit_plot, load_config, run_experiment
from lsviucb.harness.config import ExperimentConfig
from lsviucb.harness.runner import render_comparison
from lsviucb.links import LINK_NAMES

_console = Console(file=sys.stderr)
logging.basicConfig(
    format="%(message)s", datefmt="[%X]", handlers=[RichHandler(console=_console)]
)
_logger = logging.getLogger(__name__)

# NOTE: We configure the top package logger, rather than the root logger,
# to avoid overly verbose logging in third-party code by default.
_package_logger = logging.getLogger("lsviucb")
_package_logger.setLevel(os.environ.get("LSVIUCB_LOGLEVEL", "INFO").upper())


class _ArgumentParser(argparse.ArgumentParser):
    """
    An `ArgumentParser` that exits with status 1 on usage errors, like every
    other configuration error.
    """

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _invalid_arguments(args: argparse.Namespace, message: str) -> NoReturn:
    """
    An `argparse` helper that fixes up the type hints on our use of
    `ArgumentParser.error`.
    """
    args._parser.error(message)
    raise ValueError("unreachable")


def _default_out_dir() -> Path:
    return Path(platformdirs.user_data_dir("lsviucb", "lsviucb")) / "runs"


def _parser() -> argparse.ArgumentParser:
    # Arguments in parent_parser can be used for both commands and subcommands
    parent_parser = _ArgumentParser(add_help=False)
    parent_parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="run with additional debug logging; supply multiple times to increase verbosity",
    )

    parser = _ArgumentParser(
        prog="lsviucb",
        description="optimistic least-squares value iteration experiments",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        parents=[parent_parser],
    )
    parser.add_argument(
        "-V", "--version", action="version", version=f"lsviucb {__version__}"
    )
    subcommands = parser.add_subparsers(
        required=True,
        dest="subcommand",
        metavar="COMMAND",
        help="the operation to perform",
        parser_class=_ArgumentParser,
    )

    # `lsviucb run`
    run = subcommands.add_parser(
        "run",
        help="run an experiment over one or more seeds",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        parents=[parent_parser],
    )
    run.add_argument(
        "--config",
        metavar="FILE",
        type=str,
        default=os.getenv("LSVIUCB_CONFIG"),
        help="A flat `key = value` configuration file, or `preset:<name>` for an embedded preset",
    )

    env_options = run.add_argument_group("Environment options")
    env_options.add_argument(
        "--env",
        choices=ENV_FAMILIES,
        help="The environment family",
    )
    env_options.add_argument(
        "--num-states",
        metavar="S",
        type=int,
        help="The number of states (the chain length for `chain`)",
    )
    env_options.add_argument(
        "--num-actions",
        metavar="A",
        type=int,
        help="The number of actions",
    )
    env_options.add_argument(
        "--horizon",
        metavar="H",
        type=int,
        help="The episode length",
    )

    agent_options = run.add_argument_group("Agent options")
    agent_options.add_argument(
        "--link",
        choices=LINK_NAMES,
        help="The link function of the value model",
    )
    agent_options.add_argument(
        "--gamma-scale",
        metavar="C",
        type=float,
        help="The multiplier of the confidence width",
    )
    agent_options.add_argument(
        "--bonus-cap",
        metavar="GAMMA",
        type=float,
        help="An explicit bonus cap; by default it is derived from the confidence width",
    )
    agent_options.add_argument(
        "--ball-radius",
        metavar="B",
        type=str,
        help="The parameter-ball radius, or `auto` for the square root of the feature dimension",
    )
    agent_options.add_argument(
        "--baselines",
        metavar="NAMES",
        type=str,
        help="A comma-separated list of baselines to compare against (`random`, `eps_greedy`)",
    )

    run_options = run.add_argument_group("Run options")
    run_options.add_argument(
        "--episodes",
        metavar="T",
        type=int,
        help="The number of episodes per run",
    )
    run_options.add_argument(
        "--seed",
        "--seeds",
        dest="seeds",
        metavar="SEEDS",
        type=str,
        help="The seeds to run: `3`, `0,2,5` or an inclusive range `0..9`",
    )
    run_options.add_argument(
        "--out",
        metavar="DIR",
        type=Path,
        help="The output directory (default: $LSVIUCB_OUT, or a per-user data directory)",
    )
    run_options.add_argument(
        "--workers",
        metavar="N",
        type=int,
        help="The number of worker processes for the seed sweep (default: $LSVIUCB_WORKERS, or 1)",
    )

    # `lsviucb plot`
    plot = subcommands.add_parser(
        "plot",
        help="plot an aggregated regret CSV as SVG",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        parents=[parent_parser],
    )
    plot.add_argument(
        "--in",
        dest="input",
        metavar="CSV",
        type=Path,
        required=True,
        help="The aggregated regret CSV to plot",
    )
    plot.add_argument(
        "--out",
        metavar="SVG",
        type=Path,
        required=True,
        help="The SVG file to write",
    )
    plot.add_argument(
        "--no-bands",
        action="store_true",
        help="Draw only the mean curves, and fit the axes to them",
    )

    # `lsviucb diagnose`
    diagnose = subcommands.add_parser(
        "diagnose",
        help="re-derive the diagnostics report of a finished run",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        parents=[parent_parser],
    )
    diagnose.add_argument(
        "--run",
        metavar="DIR",
        type=Path,
        required=True,
        help="The output directory of a previous `lsviucb run`",
    )

    return parser


def main(args: list[str] | None = None) -> None:
    if not args:
        args = sys.argv[1:]

    parser = _parser()
    args = parser.parse_args(args)

    # Configure logging upfront, so that we don't miss anything.
    if args.verbose >= 1:
        _package_logger.setLevel("DEBUG")
    if args.verbose >= 2:
        logging.getLogger().setLevel("DEBUG")

    _logger.debug(f"parsed arguments {args}")

    # Stuff the parser back into our namespace, so that we can use it for
    # error handling later.
    args._parser = parser

    try:
        if args.subcommand == "run":
            _run(args)
        elif args.subcommand == "plot":
            emit_plot(args.input, args.out, bands=not args.no_bands)
        elif args.subcommand == "diagnose":
            _diagnose(args)
        else:
            _invalid_arguments(args, f"Unknown subcommand: {args.subcommand}")
    except Error as e:
        e.log_and_exit(_logger, args.verbose >= 1)


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides: Dict[str, Any] = {
        "env.family": args.env,
        "env.num_states": args.num_states,
        "env.num_actions": args.num_actions,
        "env.horizon": args.horizon,
        "agent.link": args.link,
        "agent.gamma_scale": args.gamma_scale,
        "agent.bonus_cap": args.bonus_cap,
        "agent.ball_radius": args.ball_radius,
        "baselines": args.baselines,
        "episodes": args.episodes,
        "seeds": args.seeds,
        "out": args.out,
        "workers": args.workers,
    }
    defaults: Dict[str, Optional[Any]] = {
        "out": os.getenv("LSVIUCB_OUT") or _default_out_dir(),
        "workers": os.getenv("LSVIUCB_WORKERS"),
    }
    return load_config(args.config, overrides, defaults=defaults)


def _run(args: argparse.Namespace) -> None:
    config = _config_from_args(args)
    _logger.debug(f"resolved configuration {config}")

    if config.baselines:
        comparison = compare_baselines(config)
        Console().print(render_comparison(comparison))
    else:
        outcome = run_experiment(config)
        Console().print(render_comparison(outcome.comparison()))
    print(config.out)


def _diagnose(args: argparse.Namespace) -> None:
    report = diagnose_run(args.run)
    if report.optimism_checks:
        _logger.info(
            f"optimism: {report.optimism_violations} violation(s) in {report.optimism_checks} check(s)"
        )
    print(canonical_json(report).decode())
