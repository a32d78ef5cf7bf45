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
The `lsviucb` Python APIs.

For command-line usage of `lsviucb`, refer to the project README.

Otherwise, here are some quick starting points:

* `lsviucb.agent`: the optimistic least-squares value iteration agent and
  its baselines
* `lsviucb.environments`: tabular, linear, chain and counterexample MDPs
* `lsviucb.diagnostics`: executable checks of the agent's guarantees
* `lsviucb.harness`: config-driven experiments, CSV output and plots
"""

__version__ = "0.4.0"
