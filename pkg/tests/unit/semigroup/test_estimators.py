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
import math

import numpy as np
import pytest

from hypocoerce.constants.interfaces import ModelSpec
from hypocoerce.geometry.catalog import abelian, heisenberg
from hypocoerce.semigroup.estimators import (
    EstimatorConfig,
    EstimatorResult,
    as_point,
    as_system,
    estimate_gamma,
    estimate_Ptf,
    estimate_variance,
    estimate_Zk_Ptf,
    evaluate,
    gamma_result,
    simulate,
)
from hypocoerce.semigroup.observables import Observable

BETA = 1.0


@pytest.fixture(scope="module")
def ou_spec():
    return ModelSpec.create(abelian(1), BETA)


def linear(spec):
    return Observable.for_geometry("x", spec.geometry)


def test_ptf_matches_the_ornstein_uhlenbeck_mean(ou_spec, oracle_config, tracker):
    t, x0 = 0.5, 1.5
    result = estimate_Ptf(ou_spec, linear(ou_spec), [x0], t, oracle_config)
    tracker.track("estimate", result.value)
    tracker.track("std_err", result.std_err)
    assert result.method == "mc"
    assert result.n_paths == oracle_config.n_paths
    assert result.value == pytest.approx(x0 * math.exp(-BETA * t), abs=3 * result.std_err)


def test_variance_matches_the_ornstein_uhlenbeck_variance(ou_spec, oracle_config):
    t = 0.5
    result = estimate_variance(ou_spec, linear(ou_spec), [0.0], t, oracle_config)
    expected = (1 - math.exp(-2 * BETA * t)) / BETA
    assert result.value == pytest.approx(expected, abs=3 * result.std_err)


def test_exact_shortcuts(ou_spec, small_config):
    f = linear(ou_spec)
    assert estimate_Ptf(ou_spec, f, [2.0], 0.0, small_config) == EstimatorResult.exact(2.0, small_config)
    constant = Observable.constant(5, ou_spec.geometry.symbols())
    assert estimate_Ptf(ou_spec, constant, [2.0], 1.0, small_config).value == 5.0
    assert estimate_variance(ou_spec, constant, [2.0], 1.0, small_config).value == 0.0
    assert estimate_Zk_Ptf(ou_spec, constant, [2.0], 1.0, 0, small_config).value == 0.0
    assert estimate_gamma(ou_spec, f, [2.0], 0.0, small_config).value == pytest.approx(1.0)


@pytest.mark.parametrize("derivative", ["crn", "tangent"])
def test_derivative_of_the_semigroup(ou_spec, small_config, derivative):
    config = small_config.replace(derivative=derivative)
    t = 0.7
    result = estimate_Zk_Ptf(ou_spec, linear(ou_spec), [0.4], t, 0, config)
    assert result.value == pytest.approx(math.exp(-BETA * t), rel=1e-4)
    gamma = estimate_gamma(ou_spec, linear(ou_spec), [0.4], t, config)
    assert gamma.value == pytest.approx(math.exp(-2 * BETA * t), rel=1e-4)


def test_common_noise_reduces_the_derivative_error(ou_spec, small_config):
    t, x0, h = 0.5, 0.8, small_config.h
    f = Observable.for_geometry("x**2", ou_spec.geometry)
    config = small_config.replace(n_paths=4000, richardson=False)
    common = estimate_Zk_Ptf(ou_spec, f, [x0], t, 0, config)

    # the same difference quotient with the two ends driven by different seeds
    up = simulate(as_system(ou_spec), as_point([x0 + h], 1), t, config)
    down = simulate(as_system(ou_spec), as_point([x0 - h], 1), t, config.replace(seed=config.seed + 1))
    quotient = (evaluate(f, up.final()) - evaluate(f, down.final())) / (2 * h)
    independent = EstimatorResult.from_samples(quotient, config)

    # ∂_x E[ξ_t²] = 2x e^{−2βt}
    assert common.value == pytest.approx(2 * x0 * math.exp(-2 * BETA * t), abs=3 * common.std_err + 1e-3)
    assert common.std_err * 100 < independent.std_err


def test_field_index_is_checked(small_config):
    spec = ModelSpec.create(heisenberg(), 1)
    f = Observable.for_geometry("z", spec.geometry)
    with pytest.raises(IndexError):
        estimate_Zk_Ptf(spec, f, [0.0, 0.0, 0.0], 0.1, 3, small_config)


def test_heisenberg_derivative_at_time_zero(small_config):
    spec = ModelSpec.create(heisenberg(), 1)
    f = Observable.for_geometry("z", spec.geometry)
    # X_2z = x/2
    result = estimate_Zk_Ptf(spec, f, [1.0, 0.0, 0.0], 0.0, 1, small_config)
    assert result.value == pytest.approx(0.5)
    assert result.method == "exact"


def test_gamma_standard_error_keeps_the_second_order_term(small_config):
    samples = np.random.default_rng(0).normal(size=(2, 400))
    result = gamma_result(samples, small_config, "crn")
    mean = samples.mean(axis=1)
    first_order = float(2 * mean @ np.cov(samples) @ (2 * mean)) / samples.shape[1]
    assert result.value == pytest.approx(float(np.sum(mean**2)))
    assert result.std_err**2 > first_order


def test_config_validation():
    with pytest.raises(ValueError):
        EstimatorConfig(derivative="malliavin")
    with pytest.raises(ValueError):
        EstimatorConfig(h=0.5)


def test_result_json(small_config):
    result = EstimatorResult.from_samples(np.array([1.0]), small_config)
    assert result.to_json()["std_err"] is None
    scaled = EstimatorResult(2.0, 0.5, 10, 0, 0.01).scaled(-2.0)
    assert (scaled.value, scaled.std_err) == (-4.0, 1.0)
