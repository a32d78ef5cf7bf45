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
Exceptions.
"""

import sys
from logging import Logger
from typing import Optional


class Error(Exception):
    """Base lsviucb exception type. Defines helpers for diagnostics."""

    exit_code: int = 1
    """
    The process exit status used by `log_and_exit`.
    """

    def diagnostics(self) -> str:
        """Returns human-friendly error information."""

        return str(self)

    def log_and_exit(self, logger: Logger, raise_error: bool = False) -> None:
        """Prints all relevant error information to stderr and exits."""

        remind_verbose = (
            "Raising original exception:"
            if raise_error
            else "For detailed error information, run lsviucb with the `--verbose` flag."
        )

        logger.error(f"{self.diagnostics()}\n{remind_verbose}")

        if raise_error:
            # don't want "during handling another exception"
            self.__suppress_context__ = True
            raise self

        sys.exit(self.exit_code)


class ConfigError(Error):
    """Raised when an experiment configuration is invalid or unresolvable."""

    def diagnostics(self) -> str:
        """Returns diagnostics for the error."""

        return f"""\
        Invalid configuration: {self}.

        Check the configuration file and command-line flags and try again."""


class DomainError(Error, ValueError):
    """
    Raised when an input lies outside of the domain an operation is defined on
    (non-finite values, values outside of a link's range, and so on).
    """


class UnsupportedOracle(Error):
    """
    Raised when exact `Q*` values are requested for an environment that
    cannot be solved by dynamic programming.
    """


class ConstructionError(Error):
    """Raised when a randomized environment construction gives up."""


class OutputError(Error):
    """Raised when experiment outputs cannot be written."""

    def diagnostics(self) -> str:
        """Returns diagnostics for the error."""

        cause_ctx = (
            f"""

        Additional context:

        {self.__cause__}
        """
            if self.__cause__
            else ""
        )

        return f"{self}." + cause_ctx


class PlotError(Error):
    """
    Raised when an aggregated regret table cannot be plotted.
    """

    def __init__(self, message: str, row: Optional[int] = None) -> None:
        """Constructs a `PlotError`, optionally tied to a 1-based CSV row."""
        super().__init__(message)
        self.row = row

    def diagnostics(self) -> str:
        """Returns diagnostics for the error."""
        if self.row is None:
            return f"Unable to plot: {self}."
        return f"Unable to plot: row {self.row}: {self}."


class InvariantError(Error):
    """
    Base type for broken invariants: conditions that the algorithm or its
    environments guarantee and that were nonetheless observed to fail.
    """

    exit_code = 2

    def diagnostics(self) -> str:
        """Returns diagnostics for the error."""

        return f"""\
        Invariant violated ({self.__class__.__name__}): {self}.

        This indicates a bug, a misdeclared link constant, or an invalid
        environment construction."""


class AssumptionViolation(InvariantError):
    """Raised when a link function breaks its declared regularity constants."""


class LemmaViolation(InvariantError):
    """Raised when the link sandwich inequality fails beyond its slack."""


class ClosureViolation(InvariantError):
    """Raised when a Bellman backup is not linear in the features."""


class PotentialViolation(InvariantError):
    """Raised when the elliptical potential bound is exceeded."""


class EnvironmentFault(InvariantError):
    """Raised when an environment produces malformed dynamics or rewards."""


class NormalizationViolation(InvariantError):
    """Raised when an episode's total reward falls outside of `[0, 1]`."""
