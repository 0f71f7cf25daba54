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
import numpy as np
import pytest

from hypocoerce.geometry.catalog import abelian, heisenberg
from hypocoerce.semigroup.observables import Observable, ObservableError


@pytest.fixture
def geometry():
    return heisenberg()


def test_parse_with_coordinate_names_and_indices(geometry):
    by_name = Observable.for_geometry("x*y + z**2", geometry)
    by_index = Observable.for_geometry("x1*x2 + x3**2", geometry)
    points = np.array([[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]])
    np.testing.assert_allclose(by_name(points), [11.0, -0.5])
    np.testing.assert_allclose(by_index(points), by_name(points))
    assert by_name.text == "x*y + z**2"


@pytest.mark.parametrize("text", ["w + x", "x**-1", "log(x)", "x +", "sqrt(x)"])
def test_rejected_expressions(geometry, text):
    with pytest.raises(ObservableError):
        Observable.for_geometry(text, geometry)


def test_sup_bounds(geometry):
    assert Observable.for_geometry("sin(x)*cos(y) + 2", geometry).sup_bound == pytest.approx(3.0)
    assert Observable.for_geometry("tanh(z)**2", geometry).sup_bound == pytest.approx(1.0)
    assert Observable.for_geometry("x", geometry).sup_bound is None
    assert not Observable.for_geometry("exp(x)", geometry).bounded


def test_gamma_and_subgradient(geometry):
    f = Observable.for_geometry("z", geometry)
    point = np.array([[2.0, 0.0, 5.0]])
    # X_1z = −y/2, X_2z = x/2, Z_3z = 1
    np.testing.assert_allclose(f.gamma(geometry)(point), [2.0])
    np.testing.assert_allclose(f.subgradient(geometry)(point), [1.0])
    np.testing.assert_allclose(f.subgradient(geometry, G=np.array([[0.0, 0.0], [0.0, 1.0]]))(point), [2.0])


def test_apply_field_dimension_check():
    f = Observable.for_geometry("x", abelian(1))
    with pytest.raises(ObservableError):
        f.apply_field(heisenberg().X[0])


def test_derivatives(geometry):
    f = Observable.for_geometry("x*y**2", geometry)
    point = np.array([1.0, 2.0, 0.0])
    np.testing.assert_allclose(f.gradient(point), [4.0, 4.0, 0.0])
    np.testing.assert_allclose(f.hessian(point), [[0.0, 4.0, 0.0], [4.0, 2.0, 0.0], [0.0, 0.0, 0.0]])
    np.testing.assert_allclose(f.diff(1)(point), 4.0)


def test_constant_observable_broadcasts(geometry):
    f = Observable.constant(3, geometry.symbols())
    assert f.is_constant()
    np.testing.assert_allclose(f(np.zeros((4, 3))), [3.0] * 4)
    with pytest.raises(ObservableError):
        f(np.zeros((4, 2)))
