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

from hypocoerce.experiments.run import uniform_configuration
from hypocoerce.lattice.dynamics import CylinderFunction
from hypocoerce.lattice.experiments import (
    DecayFit,
    check_gamma_lambda_decay,
    check_local_recursion,
    ergodicity_decay,
    finite_speed_profile,
    omega_membership,
    volume_cauchy,
    volume_cauchy_series,
)
from hypocoerce.lattice.model import LatticeConfigError, build_lattice
from hypocoerce.semigroup.checks import HOLDS, VIOLATED
from hypocoerce.semigroup.estimators import EstimatorConfig
from hypocoerce.semigroup.observables import Observable


@pytest.fixture
def f(chain):
    return CylinderFunction(chain, [(0,)], Observable.for_geometry("x", chain.site_geometry))


class TestDecayFit:
    def test_exact_exponential(self):
        x = [0.0, 1.0, 2.0, 3.0, 4.0]
        fit = DecayFit.fit(x, [2.0 * math.exp(-0.5 * v) for v in x])
        assert fit.rate == pytest.approx(0.5)
        assert fit.intercept == pytest.approx(math.log(2.0))
        assert fit.rate_lower == pytest.approx(0.5)
        assert fit.significant

    def test_too_few_positive_points(self):
        assert DecayFit.fit([0, 1, 2, 3], [1.0, 0.0, -1.0, 0.5]) is None
        assert DecayFit.fit([1, 1, 1], [1.0, 0.5, 0.2]) is None

    def test_growth_is_not_significant(self):
        fit = DecayFit.fit([0, 1, 2, 3], [1.0, 2.0, 4.0, 8.0])
        assert fit.rate == pytest.approx(-math.log(2.0))
        assert not fit.to_json()["significant"]


def test_finite_speed_profile(chain, f, small_config):
    profile = finite_speed_profile(chain, f, 0.5, None, small_config)
    assert len(profile.rows) == 6
    assert [r.distance for r in profile.rows] == [1, 1, 2, 2, 3, 3]
    assert all(r.n_k == r.distance for r in profile.rows)
    near, far = profile.rows[0].estimate.value, profile.rows[-1].estimate.value
    assert near > 0
    assert far == pytest.approx(0.0, abs=1e-12)
    assert profile.to_json()["rows"] == 6
    with pytest.raises(ValueError):
        finite_speed_profile(chain, f, 0.0, None, small_config)
    with pytest.raises(LatticeConfigError):
        finite_speed_profile(chain, f, 0.5, [], small_config)


def test_volume_cauchy(chain, f, small_config):
    small = chain.with_active([(0,)])
    point = volume_cauchy(small, chain, f, 0.5, None, small_config)
    assert point.n_bar == 1
    assert point.active_size == 1
    assert point.discrepancy.value >= 0
    same = volume_cauchy(chain, chain, f, 0.5, None, small_config)
    assert same.discrepancy.value == 0.0


def test_volume_cauchy_validation(chain, f, small_config):
    with pytest.raises(LatticeConfigError):
        volume_cauchy(chain.with_active([(1,)]), chain, f, 0.5, None, small_config)
    with pytest.raises(LatticeConfigError):
        volume_cauchy(chain, chain.with_active([(0,)]), f, 0.5, None, small_config)


def test_volume_cauchy_series(chain, f, small_config):
    series = volume_cauchy_series(chain, f, [0, 1], 0.5, None, small_config)
    assert [p.active_size for p in series.points] == [1, 3]
    assert series.points[-1].discrepancy.value == 0.0
    assert len(series.to_json()["points"]) == 2


def test_ergodicity_with_identical_configurations(chain, f, small_config):
    result = ergodicity_decay(chain, f, chain.zeros(), chain.zeros(), [0.0, 1.0], small_config)
    assert result.status == "identical"
    assert all(d.value == 0.0 for d in result.differences)
    assert result.theory["varsigma_half"] == pytest.approx(0.75)


def test_ergodicity_decays(chain, f, small_config):
    omega = chain.configuration({(0,): [2.0]})
    result = ergodicity_decay(chain, f, omega, chain.zeros(), [0.0, 0.5, 1.0, 1.5, 2.0], small_config)
    assert result.differences[0].value == pytest.approx(2.0)
    assert result.status == "decaying"
    assert result.fit.rate == pytest.approx(1.0, rel=0.1)
    assert len(result.csv_rows()) == 5
    with pytest.raises(ValueError):
        ergodicity_decay(chain, f, omega, chain.zeros(), [], small_config)


def test_omega_membership(chain):
    member = omega_membership(chain, chain.zeros(), zeta=2.0, K=1.0)
    assert member.member
    assert member.partial_sum == 0.0
    far = omega_membership(chain, chain.configuration({(0,): [5.0]}), zeta=2.0, K=1.0)
    assert not far.member
    assert far.partial_sum == pytest.approx(5.0)
    with pytest.raises(LatticeConfigError):
        omega_membership(chain, chain.zeros(), zeta=1.0, K=1.0)
    with pytest.raises(LatticeConfigError):
        omega_membership(chain, chain.zeros(), zeta=2.0, K=0.0)


def test_gamma_lambda_decay(chain, f, small_config):
    checks = check_gamma_lambda_decay(chain, f, chain.zeros(), 0.5, small_config)
    assert len(checks) == 1
    assert checks[0].verdict == HOLDS


def test_local_recursion(chain, f, small_config):
    check = check_local_recursion(chain, f, chain.zeros(), (0,), [0.0, 0.5, 1.0], None, small_config)
    assert check.rhs.method == "recursion"
    assert check.verdict != VIOLATED
    with pytest.raises(ValueError):
        check_local_recursion(chain, f, chain.zeros(), (0,), [0.5, 1.0], None, small_config)
    with pytest.raises(ValueError):
        check_local_recursion(chain, f, chain.zeros(), (0,), [0.0], None, small_config)


def test_probe_configurations_are_checked(chain, f, small_config):
    with pytest.raises(ValueError):
        finite_speed_profile(chain, f, 0.5, [np.zeros(3)], small_config)


class TestHeisenbergChain:
    @pytest.fixture
    def config(self):
        return EstimatorConfig(dt=0.01, n_paths=2000, seed=13, workers=1)

    @pytest.fixture
    def g(self, heisenberg_chain):
        return CylinderFunction(heisenberg_chain, [(0,)], Observable.for_geometry("x", heisenberg_chain.site_geometry))

    def test_propagation_profile_decays(self, heisenberg_chain, g, config):
        profile = finite_speed_profile(heisenberg_chain, g, 0.5, None, config)
        assert [r.distance for r in profile.rows] == [1, 1, 2, 2, 3, 3, 4, 4]
        assert profile.spearman < -0.9
        assert profile.envelope.rate_lower > 0
        assert profile.decays

    def test_volume_cauchy_discrepancy_decays(self, heisenberg_chain, g, config):
        start = uniform_configuration(heisenberg_chain, [1.0, 0.0, 0.0])
        series = volume_cauchy_series(heisenberg_chain, g, [0, 1, 2], 0.5, [start], config)
        assert [p.n_bar for p in series.points] == [1, 2, 3]
        values = [p.discrepancy.value for p in series.points]
        assert values[0] > values[1] > values[2] > 0
        assert series.fit.rate > 0
        assert series.fit.significant

    def test_volume_cauchy_without_coupling_is_exact(self, heisenberg_chain, config):
        free = build_lattice(1, heisenberg_chain.box, heisenberg_chain.active, "heisenberg", beta=3)
        g = CylinderFunction(free, [(0,)], Observable.for_geometry("x", free.site_geometry))
        start = uniform_configuration(free, [1.0, 0.0, 0.0])
        point = volume_cauchy(free.with_active([(0,)]), free, g, 0.5, [start], config)
        assert point.discrepancy.value == 0.0

    def test_ergodicity_rate_is_positive(self, heisenberg_chain, g, config):
        omega = heisenberg_chain.configuration({(0,): [2.0, 0.0, 0.0]})
        grid = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5]
        result = ergodicity_decay(heisenberg_chain, g, omega, heisenberg_chain.zeros(), grid, config)
        assert result.status == "decaying"
        assert result.fit.rate_lower > 0
        # the horizontal coordinates are damped at rate β
        assert result.fit.rate == pytest.approx(3.0, rel=0.15)


def test_decoupled_ornstein_uhlenbeck_difference_is_exact(small_config):
    free = build_lattice(1, [(-2, 2)], [(0,)], "abelian", beta=1)
    f = CylinderFunction(free, [(0,)], Observable.for_geometry("x", free.site_geometry))
    omega = free.configuration({(0,): [2.0]})
    grid = [0.0, 0.5, 1.0, 1.5]
    result = ergodicity_decay(free, f, omega, free.zeros(), grid, small_config)
    for t, difference in zip(grid, result.differences):
        assert difference.value == pytest.approx(2.0 * math.exp(-t), abs=3 * difference.std_err + 1e-3)
