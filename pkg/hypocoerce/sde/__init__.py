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
from hypocoerce.sde.integrators import (
    FlowStepError,
    IntegratorConfig,
    NumericalBlowupError,
    PathEnsemble,
    Scheme,
    flow_commutator,
    flow_exp,
    integrate_paths,
    tangent_paths,
)
from hypocoerce.sde.rng import PATH_BLOCK_SIZE, NoiseSource
from hypocoerce.sde.system import SdeSystem, assemble_sde, generator_expression, sqrt_spd

__all__ = [
    "FlowStepError",
    "IntegratorConfig",
    "NoiseSource",
    "NumericalBlowupError",
    "PATH_BLOCK_SIZE",
    "PathEnsemble",
    "Scheme",
    "SdeSystem",
    "assemble_sde",
    "flow_commutator",
    "flow_exp",
    "generator_expression",
    "integrate_paths",
    "sqrt_spd",
    "tangent_paths",
]
