# Copyright (c) 2025, hypocoerce contributors.  All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import os

from hypocoerce.package_info import (
    __contact_names__,
    __description__,
    __keywords__,
    __license__,
    __package_name__,
    __shortversion__,
    __version__,
)

os.environ.setdefault("RAY_USAGE_STATS_ENABLED", "0")
