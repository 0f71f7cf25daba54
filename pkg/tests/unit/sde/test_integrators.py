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

from hypocoerce.constants.interfaces import ModelSpec
from hypocoerce.geometry.catalog import abelian, heisenberg
from hypocoerce.polyfield.vector_field import PolyVectorField
from hypocoerce.sde.integrators import (
    FlowStepError,
    IntegratorConfig,
    NumericalBlowupError,
    Scheme,
    expectation,
    flow_commutator,
    flow_exp,
    integrate_paths,
    tangent_paths,
)
from hypocoerce.sde.rng import NoiseSource
from hypocoerce.sde.system import assemble_sde
from hypocoerce.semigroup.estimators import EstimatorConfig, variance_result

BETA = 1.5


@pytest.fixture(scope="module")
def ou_system():
    return assemble_sde(ModelSpec.create(abelian(1), "3/2"))


class ExplodingProcess:
    """dx = x² dt on R¹; every path started at 1 leaves in finite time."""

    dim = 1
    channels = 1

    def drift(self, points, ito=False):
        return points**2 * 1e6

    def diffusion_apply(self, points, dW):
        return np.zeros_like(points)

    def drift_jvp(self, points, tangent, ito=False):
        return 2e6 * points * tangent

    def diffusion_jvp(self, points, tangent, dW):
        return np.zeros_like(points)

    def increments(self, seed, step, block, size, dt):
        return NoiseSource(seed).increments(step, block, size, 1, dt)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("scheme", list(Scheme))
def test_ornstein_uhlenbeck_moments(ou_system, scheme, t):
    x0 = 2.0
    config = IntegratorConfig(dt=0.005, t_end=t, seed=3, n_paths=20_000, scheme=scheme)
    ensemble = integrate_paths(ou_system, config, [x0], workers=1)
    mean, se = expectation(ensemble, lambda x: x[:, 0])
    assert mean == pytest.approx(x0 * np.exp(-BETA * t), abs=3 * se)
    variance = variance_result(ensemble.final()[:, 0], EstimatorConfig(dt=0.005, seed=3))
    expected = (1 - np.exp(-2 * BETA * t)) / BETA
    assert variance.value == pytest.approx(expected, abs=3 * variance.std_err)


def test_corrected_euler_has_weak_order_one(ou_system):
    # the bias of the mean grows with x0 while the Monte Carlo error does not
    x0, t = 50.0, 1.0
    steps = [0.1, 0.05, 0.025, 0.0125]
    errors = []
    for dt in steps:
        config = IntegratorConfig(dt=dt, t_end=t, seed=5, n_paths=20_000, scheme=Scheme.EULER_ITO_CORRECTED)
        mean, _ = expectation(integrate_paths(ou_system, config, [x0], workers=1), lambda x: x[:, 0])
        errors.append(abs(mean - x0 * np.exp(-BETA * t)))
    slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
    assert slope >= 0.9


def test_undamped_heisenberg_area_is_centred():
    system = assemble_sde(ModelSpec.create(heisenberg(), 0))
    config = IntegratorConfig(dt=0.01, t_end=1.0, seed=17, n_paths=20_000)
    ensemble = integrate_paths(system, config, [0.0, 0.0, 0.0], workers=1)
    mean, se = expectation(ensemble, lambda x: x[:, 2])
    assert se > 0
    assert abs(mean) <= 3 * se


@pytest.mark.parametrize("g", [1.0, -0.5])
def test_schemes_agree_with_an_antisymmetric_coupling(g):
    # the correction term only matters when G has an antisymmetric part
    spec = ModelSpec.create(heisenberg(), 1, G=[[0, g], [-g, 0]])
    system = assemble_sde(spec)
    x0 = [0.4, -0.3, 0.2]
    estimates = []
    for scheme in Scheme:
        config = IntegratorConfig(dt=0.005, t_end=0.5, seed=23, n_paths=20_000, scheme=scheme)
        ensemble = integrate_paths(system, config, x0, workers=1)
        estimates.append(expectation(ensemble, lambda x: x[:, 0] * x[:, 2] + x[:, 1] ** 2))
    (heun, heun_se), (euler, euler_se) = estimates
    assert abs(heun - euler) < 3 * np.hypot(heun_se, euler_se)


def test_same_keys_give_identical_paths(ou_system):
    config = IntegratorConfig(dt=0.05, t_end=0.5, seed=9, n_paths=100)
    a = integrate_paths(ou_system, config, [0.3], workers=1)
    b = integrate_paths(ou_system, config, [0.3], workers=1)
    np.testing.assert_array_equal(a.snapshots, b.snapshots)
    c = integrate_paths(ou_system, IntegratorConfig(dt=0.05, t_end=0.5, seed=10, n_paths=100), [0.3], workers=1)
    assert not np.allclose(a.final(), c.final())


def test_initial_conditions_share_noise(ou_system):
    config = IntegratorConfig(dt=0.05, t_end=0.5, seed=1, n_paths=64)
    ensemble = integrate_paths(ou_system, config, [[0.0], [1.0]], workers=1)
    # linear dynamics: the difference is deterministic
    difference = ensemble.final(1) - ensemble.final(0)
    np.testing.assert_allclose(difference, difference[0], atol=1e-12)


def test_tangent_of_ornstein_uhlenbeck(ou_system):
    config = IntegratorConfig(dt=0.01, t_end=1.0, seed=0, n_paths=16)
    ensemble = tangent_paths(ou_system, config, [0.5], direction=[1.0], workers=1)
    np.testing.assert_allclose(ensemble.final_tangent()[:, 0], np.exp(-BETA), rtol=1e-4)
    with pytest.raises(ValueError):
        integrate_paths(ou_system, config, [0.5], workers=1).final_tangent()


def test_snapshots_and_rows(ou_system):
    config = IntegratorConfig(dt=0.1, t_end=1.0, seed=0, n_paths=3, record_every=3)
    assert config.snapshot_steps() == [0, 3, 6, 9, 10]
    ensemble = integrate_paths(ou_system, config, [1.0], workers=1)
    np.testing.assert_allclose(ensemble.times, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert ensemble.snapshots.shape == (5, 1, 3, 1)
    rows = ensemble.to_rows()
    assert len(rows) == 15
    assert rows[0] == [0, 0, 0.0, 1.0]
    assert IntegratorConfig(dt=0.1, t_end=1.0, seed=0, n_paths=1).snapshot_steps() == [10]


def test_initial_condition_shape_is_checked(ou_system):
    config = IntegratorConfig(dt=0.1, t_end=0.1, seed=0, n_paths=2)
    with pytest.raises(ValueError):
        integrate_paths(ou_system, config, [1.0, 2.0], workers=1)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"dt": 0.0},
        {"t_end": -1.0},
        {"n_paths": 0},
        {"record_every": 0},
        {"max_blowup_fraction": 1.0},
        {"scheme": "milstein"},
    ],
)
def test_config_validation(kwargs):
    base = {"dt": 0.1, "t_end": 1.0, "seed": 0, "n_paths": 10}
    with pytest.raises(ValueError):
        IntegratorConfig(**{**base, **kwargs})


def test_blowup_is_reported():
    config = IntegratorConfig(dt=0.1, t_end=1.0, seed=0, n_paths=4, max_blowup_fraction=0.5)
    with pytest.raises(NumericalBlowupError) as info:
        integrate_paths(ExplodingProcess(), config, [1.0], workers=1)
    assert info.value.path == 0
    assert info.value.n_failed == 4


def test_flow_exp():
    field = PolyVectorField.coordinate(2, 1)
    np.testing.assert_allclose(flow_exp(field, [0.5, 0.5], 0.1), [0.5, 0.6])
    with pytest.raises(FlowStepError):
        flow_exp(field, [0.0, 0.0], 0.2)


def test_flow_commutator_recovers_the_bracket():
    X1, X2 = heisenberg().X
    estimate = flow_commutator(X1, X2, [0.3, -0.2, 0.5], 0.05)
    np.testing.assert_allclose(estimate, [0.0, 0.0, 1.0], atol=1e-8)
