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
from hypocoerce.lattice.constants import LatticeConstants, lattice_constants
from hypocoerce.lattice.dynamics import (
    CylinderFunction,
    LatticeSystem,
    estimate_gamma_k,
    lattice_system,
    site_stream,
    sup_over_probes,
)
from hypocoerce.lattice.experiments import (
    CauchyPoint,
    CauchySeries,
    DecayFit,
    ErgodicityResult,
    OmegaMembership,
    SpeedProfile,
    check_gamma_lambda_decay,
    check_local_recursion,
    ergodicity_decay,
    finite_speed_profile,
    omega_membership,
    volume_cauchy,
    volume_cauchy_series,
)
from hypocoerce.lattice.model import (
    CouplingSpec,
    LatticeConfigError,
    LatticeModel,
    build_lattice,
    centred_box,
)
