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

from hypocoerce.geometry.catalog import (
    CATALOG,
    abelian,
    get_geometry,
    grusin,
    heisenberg,
    martinet,
)
from hypocoerce.geometry.gauge import (
    CutoffRho,
    DilationQuasiNorm,
    EuclideanGauge,
    GaugeDomainError,
    HTypeGauge,
    cutoff_rho,
    gauge_for,
    gauge_identities,
    lyapunov_assumption_bounds,
)
from hypocoerce.geometry.interfaces import Geometry, GeometryValidationError
