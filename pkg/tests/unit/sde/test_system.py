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
import pickle

import numpy as np
import pytest

from hypocoerce.constants.drifts import tanh_drift
from hypocoerce.constants.interfaces import ConditionGError, ModelSpec
from hypocoerce.geometry.catalog import abelian, grusin, heisenberg, martinet
from hypocoerce.sde.system import SQRT_TWO, SdeSystem, assemble_sde, generator_expression, sqrt_spd
from hypocoerce.semigroup.observables import Observable

POINTS = np.array([[0.3, -0.7, 0.2], [1.1, 0.4, -0.5], [0.0, 0.0, 0.0]])


def test_ornstein_uhlenbeck_coefficients():
    system = assemble_sde(ModelSpec.create(abelian(2), 2))
    points = np.array([[1.0, -2.0]])
    np.testing.assert_allclose(system.drift(points), [[-2.0, 4.0]])
    np.testing.assert_allclose(system.drift(points, ito=True), [[-2.0, 4.0]])
    np.testing.assert_allclose(system.diffusion(points)[0], SQRT_TWO * np.eye(2))


@pytest.mark.parametrize(
    "spec_fn",
    [
        lambda: ModelSpec.create(heisenberg(), 2),
        lambda: ModelSpec.create(heisenberg(), "1/2", G=[["1/2", 1], [0, "1/4"]]),
        lambda: ModelSpec.create(martinet(), 1, G=[[0, "1/3"], ["-1/3", 0]]),
        lambda: ModelSpec.create(heisenberg(), 1, alpha=tanh_drift(heisenberg(), "1/2", 0)),
    ],
)
def test_generator_agrees_with_the_operator(spec_fn):
    spec = spec_fn()
    geometry = spec.geometry
    f = Observable.for_geometry("x*z + y**2 - sin(x)", geometry)
    system = assemble_sde(spec)
    from_sde = system.generator(f, POINTS)
    from_operator = generator_expression(spec, f)(POINTS)
    np.testing.assert_allclose(from_sde, from_operator, rtol=1e-10, atol=1e-10)


def test_ito_correction_uses_the_symmetric_part():
    spec = ModelSpec.create(grusin(), 1, G=[[0, "1/2"], ["1/2", 0]])
    system = assemble_sde(spec)
    points = np.array([[0.3, -0.7], [1.1, 0.4]])
    difference = system.drift(points, ito=True) - system.drift(points)
    # G*_12 ∇_{X_1}X_2 with ∇_{X_1}X_2 = ∂y and ∇_{X_2}X_1 = 0
    np.testing.assert_allclose(difference, [[0.0, 0.5], [0.0, 0.5]], atol=1e-12)


def test_noise_scale_zero_is_deterministic():
    system = SdeSystem(ModelSpec.create(heisenberg(), 1), noise_scale=0.0)
    np.testing.assert_allclose(system.diffusion(POINTS), 0.0)


def test_condition_on_G_is_enforced():
    with pytest.raises(ConditionGError):
        assemble_sde(ModelSpec.create(heisenberg(), 1, G=[[-2, 0], [0, 1]]))


def test_sqrt_spd():
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    root = sqrt_spd(M)
    np.testing.assert_allclose(root @ root, M)
    np.testing.assert_allclose(root, root.T)
    with pytest.raises(ValueError):
        sqrt_spd(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ConditionGError):
        sqrt_spd(-np.eye(2))


def test_system_survives_pickling():
    system = assemble_sde(ModelSpec.create(heisenberg(), 2))
    clone = pickle.loads(pickle.dumps(system))
    np.testing.assert_allclose(clone.drift(POINTS), system.drift(POINTS))
