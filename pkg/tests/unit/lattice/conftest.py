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
import pytest

from hypocoerce.lattice.model import CouplingSpec, build_lattice


@pytest.fixture
def chain():
    """Ornstein-Uhlenbeck sites on {-3..3} with a nearest-neighbour tanh coupling on {-1, 0, 1}."""
    return build_lattice(
        d=1,
        box=[(-3, 3)],
        active=[(-1,), (0,), (1,)],
        site_geometry="abelian",
        beta=1,
        coupling=CouplingSpec.neighbours(1, 1, "1/10"),
    )


@pytest.fixture(scope="module")
def heisenberg_chain():
    """Heisenberg sites on {-4..4}, β = 3, nearest-neighbour tanh coupling a = 1/10 on {-3..3}."""
    return build_lattice(
        d=1,
        box=[(-4, 4)],
        active=[(s,) for s in range(-3, 4)],
        site_geometry="heisenberg",
        beta=3,
        coupling=CouplingSpec.neighbours(1, 1, "1/10"),
    )
