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
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pytest

from hypocoerce.geometry.catalog import heisenberg, martinet
from hypocoerce.polyfield.poly import Poly
from hypocoerce.polyfield.structure import (
    DilationError,
    StructureConstantError,
    StructureTensor,
    dilation_eigenvalues,
    reconstruct,
    structure_constants,
)
from hypocoerce.polyfield.vector_field import PolyVectorField, lie_bracket


@dataclass(frozen=True)
class Family:
    Z: tuple
    m: int
    D: PolyVectorField


def test_reconstruct_recovers_every_bracket():
    for geometry in (heisenberg(), martinet()):
        for k, Zk in enumerate(geometry.Z):
            for j, Xj in enumerate(geometry.X):
                assert reconstruct(geometry.c, geometry.Z, k, j) == lie_bracket(Zk, Xj)


def test_non_constant_bracket_names_the_pair():
    # X_2 = x²∂y gives Z_3 = 2x∂y, whose bracket with X_1 leaves the span
    x = Poly.variable(2, 0)
    one, zero = Poly.constant(2, 1), Poly.zero(2)
    X1 = PolyVectorField([one, zero])
    X2 = PolyVectorField([zero, x**2])
    Z3 = lie_bracket(X1, X2)
    family = Family((X1, X2, Z3), 2, PolyVectorField.euler([1, 3]))
    with pytest.raises(StructureConstantError) as info:
        structure_constants(family)
    assert (info.value.k, info.value.j) == (2, 0)


def test_dilation_must_scale_each_field():
    one, zero = Poly.constant(2, 1), Poly.zero(2)
    X1 = PolyVectorField([one, zero])
    X2 = PolyVectorField([zero, one])
    # D = −x∂x gives a negative eigenvalue for ∂x
    family = Family((X1, X2), 2, PolyVectorField.euler([-1, 1]))
    with pytest.raises(DilationError) as info:
        dilation_eigenvalues(family)
    assert info.value.k == 0


def test_tensor_views():
    tensor = heisenberg().c
    assert (tensor.n, tensor.m) == (3, 2)
    assert tensor[0, 1, 2] == 1
    assert tensor.nonzero() == {(0, 1, 2): Fraction(1), (1, 0, 2): Fraction(-1)}
    array = tensor.as_array()
    assert array.shape == (3, 2, 3)
    assert np.count_nonzero(array) == 2
    assert StructureTensor.from_nested(tensor.to_json()) == tensor
