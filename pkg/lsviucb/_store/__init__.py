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
An empty module, used to assist Python's resource machinery in embedding
the preset experiment configurations.
"""


# NOTE: `importlib.resources` can only reach top-level resources of packages,
# so this directory needs to be a package for the presets to be readable when
# lsviucb is installed as a ZIP file.
