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

from hypocoerce.constants.interfaces import ModelSpec, PreconditionError
from hypocoerce.geometry.catalog import abelian
from hypocoerce.semigroup.checks import VIOLATED
from hypocoerce.semigroup.invariant import (
    empirical_invariant_measure,
    invariant_poincare_check,
    invariant_self_consistency,
)
from hypocoerce.semigroup.observables import Observable


@pytest.fixture(scope="module")
def ou_spec():
    # stationary law N(0, 1)
    return ModelSpec.create(abelian(1), 1)


@pytest.fixture
def config(small_config):
    return small_config.replace(n_paths=1000)


@pytest.fixture
def sample(ou_spec, config):
    return empirical_invariant_measure(ou_spec, [2.0], t_burn=5.0, t_sample=5.0, thinning=50, config=config)


def test_sample_layout(sample, config):
    assert sample.states.shape == (11, config.n_paths, 1)
    assert sample.times[0] == pytest.approx(5.0)
    assert sample.flat.shape == (11 * config.n_paths, 1)


def test_moments_of_the_stationary_law(ou_spec, sample):
    mean = sample.mean(Observable.for_geometry("x", ou_spec.geometry))
    assert mean.value == pytest.approx(0.0, abs=4 * mean.std_err)
    variance = sample.variance(Observable.for_geometry("x", ou_spec.geometry))
    assert variance.value == pytest.approx(1.0, abs=4 * variance.std_err + 0.02)
    assert sample.mean(Observable.for_geometry("3", ou_spec.geometry)).method == "exact"


def test_invariant_poincare(ou_spec, sample):
    check = invariant_poincare_check(sample, Observable.for_geometry("sin(x)", ou_spec.geometry), kappa=2.0)
    assert check.kind == "nu_poincare"
    assert check.verdict != VIOLATED
    with pytest.raises(PreconditionError):
        invariant_poincare_check(sample, Observable.for_geometry("x", ou_spec.geometry), kappa=0.0)


def test_self_consistency(ou_spec, config):
    f = Observable.for_geometry("x**2", ou_spec.geometry)
    result = invariant_self_consistency(ou_spec, f, [0.0], 2.0, 2.0, 50, config)
    assert result.consistent
    assert result.to_json()["consistent"] is True
    with pytest.raises(ValueError):
        invariant_self_consistency(ou_spec, f, [0.0], 2.0, 2.0, 50, config, seeds=[1, 1])


def test_argument_validation(ou_spec, config):
    with pytest.raises(ValueError):
        empirical_invariant_measure(ou_spec, [0.0], 1.0, 1.0, 0, config)
    with pytest.raises(ValueError):
        empirical_invariant_measure(ou_spec, [0.0], 1.0, 0.0, 10, config)
