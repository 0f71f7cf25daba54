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
import logging
from fractions import Fraction

import numpy as np
import pytest

from hypocoerce.lattice.model import (
    CouplingSpec,
    LatticeConfigError,
    build_lattice,
    centred_box,
    distance_to_set,
    l1,
)


def test_neighbour_stencil():
    coupling = CouplingSpec.neighbours(2, 1, "1/2", weight=3)
    assert set(coupling.stencil) == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert coupling.range == 1
    assert coupling.stencil_l1 == 12
    assert coupling.weight((0, 0)) == 0
    assert CouplingSpec.neighbours(1, 2, 1).range == 2
    assert CouplingSpec.neighbours(1, 1, 0).is_zero


def test_coupling_validation():
    with pytest.raises(LatticeConfigError):
        CouplingSpec(amplitude=1, stencil={(1,): 1}, site_function="cubic")
    with pytest.raises(LatticeConfigError):
        CouplingSpec(amplitude=1, stencil={(1,): 1, (0, 1): 1})


def test_stencil_from_json():
    coupling = CouplingSpec.from_stencil_json("1/10", {"1,0": "1/2", "-2,0": 1, "0,1": 0.25})
    assert coupling.weight((1, 0)) == Fraction(1, 2)
    assert coupling.weight((0, 1)) == 0.25
    assert coupling.range == 2
    assert coupling.amplitude == Fraction(1, 10)
    assert CouplingSpec.from_stencil_json(1, coupling.to_json()["stencil"]).stencil == coupling.stencil
    with pytest.raises(LatticeConfigError):
        CouplingSpec.from_stencil_json(1, {"0": 1})
    with pytest.raises(LatticeConfigError):
        CouplingSpec.from_stencil_json(1, {"left": 1})


def test_chain_layout(chain):
    assert chain.n_sites == 7
    assert chain.dim == 7
    assert chain.R == 1
    assert chain.index((0,)) == 3
    assert chain.distance_to_boundary((0,)) == 4
    assert chain.distance_to_boundary((3,)) == 1
    assert chain.ball([(0,)], 0) == ((0,),)
    assert chain.ball([(1,)], 1) == ((0,), (1,))
    with pytest.raises(LatticeConfigError):
        chain.index((4,))


def test_configuration_and_site_view(chain):
    omega = chain.configuration({(1,): [2.5]})
    assert omega.shape == (7,)
    assert omega[4] == 2.5
    assert chain.site_view(np.stack([omega, omega])).shape == (2, 7, 1)
    np.testing.assert_array_equal(chain.zeros(), np.zeros(7))


def test_with_active_keeps_everything_else(chain):
    smaller = chain.with_active([(0,)])
    assert smaller.active == ((0,),)
    assert smaller.box == chain.box
    assert smaller.coupling == chain.coupling


@pytest.mark.parametrize(
    "kwargs",
    [
        {"active": [(5,)]},
        {"active": [(3,)]},
        {"box": [(2, 1)]},
        {"active": [(0, 0)]},
        {"G": [[1, 0], [0, 1]]},
    ],
)
def test_invalid_lattices(kwargs):
    base = {
        "d": 1,
        "box": [(-3, 3)],
        "active": [(0,)],
        "site_geometry": "abelian",
        "coupling": CouplingSpec.neighbours(1, 1, 1),
    }
    with pytest.raises(LatticeConfigError):
        build_lattice(**{**base, **kwargs})


def test_coupling_coordinate_must_exist():
    with pytest.raises(LatticeConfigError):
        build_lattice(1, [(-2, 2)], [(0,)], "abelian", coupling=CouplingSpec.neighbours(1, 1, 1, coordinate=1))


def test_margin_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="hypocoerce.lattice.model"):
        build_lattice(1, [(-2, 2)], [(1,)], "abelian", coupling=CouplingSpec.neighbours(1, 1, 1), margin=2)
    assert "from the box boundary" in caplog.text


def test_helpers():
    assert l1((1, -2), (0, 0)) == 3
    assert distance_to_set((3, 0), [(0, 0), (2, 1)]) == 2
    assert centred_box(2, 3) == ((-3, 3), (-3, 3))


def test_json(chain):
    record = chain.to_json()
    assert record["site_geometry"] == "abelian"
    assert record["range"] == 1
    assert record["coupling"]["amplitude"] == "1/10"
    assert record["coupling"]["stencil"] == {"-1": "1", "1": "1"}
