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
from hypocoerce.constants.drifts import (
    ALPHA_PRESETS,
    alpha_preset,
    custom_drift,
    sin_drift,
    tanh_drift,
    zero_drift,
)
from hypocoerce.constants.interfaces import (
    ConditionGError,
    DriftTerm,
    KappaReport,
    LqReport,
    MissingBoundError,
    ModelSpec,
    PreconditionError,
)
from hypocoerce.constants.kappa import (
    delta_of_G,
    delta_with_residual,
    kappa,
    kappa_g_zero,
    kappa_optimal,
    kappa_pointwise,
    kappa_q,
)

__all__ = [
    "ALPHA_PRESETS",
    "ConditionGError",
    "DriftTerm",
    "KappaReport",
    "LqReport",
    "MissingBoundError",
    "ModelSpec",
    "PreconditionError",
    "alpha_preset",
    "custom_drift",
    "delta_of_G",
    "delta_with_residual",
    "kappa",
    "kappa_g_zero",
    "kappa_optimal",
    "kappa_pointwise",
    "kappa_q",
    "sin_drift",
    "tanh_drift",
    "zero_drift",
]
