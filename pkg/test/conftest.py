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

from pathlib import Path

import numpy as np
import pytest

from lsviucb.environments import make_chain, make_counterexample, make_tabular_random

_ASSETS = (Path(__file__).parent / "assets").resolve()
assert _ASSETS.is_dir()


@pytest.fixture
def asset():
    def _asset(name: str) -> Path:
        return _ASSETS / name

    return _asset


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def tabular_env():
    # The small fixture the optimism and realizability checks run on.
    return make_tabular_random(3, 2, 3, np.random.default_rng(7))


@pytest.fixture
def chain_env():
    return make_chain(4, 6)


@pytest.fixture
def counterexample_env():
    return make_counterexample(1.0)


def pytest_addoption(parser):
    parser.addoption(
        "--skip-slow",
        action="store_true",
        help="skip the desk-scale acceptance runs",
    )


def pytest_runtest_setup(item):
    if "slow" in item.keywords and item.config.getoption("--skip-slow"):
        pytest.skip("skipping slow test due to `--skip-slow` flag")


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: mark test as a desk-scale run taking minutes"
    )
