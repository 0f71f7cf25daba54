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
from fractions import Fraction

import numpy as np
import pytest

from hypocoerce.constants.drifts import tanh_drift
from hypocoerce.constants.interfaces import ConditionGError, ModelSpec, PreconditionError
from hypocoerce.constants.kappa import (
    delta_of_G,
    delta_with_residual,
    kappa,
    kappa_g_zero,
    kappa_optimal,
    kappa_pointwise,
    kappa_q,
)
from hypocoerce.geometry.catalog import abelian, grusin, heisenberg, martinet


@pytest.mark.parametrize("geometry_fn", [heisenberg, grusin])
def test_heisenberg_pattern(geometry_fn):
    report = kappa(ModelSpec.create(geometry_fn(), 3))
    assert report.C1 == 0
    assert report.C2 == 0
    assert report.eta == 0
    assert report.C3 == 4
    assert report.delta == 1
    assert report.kappa == 2
    assert report.b0 == 2
    assert report.slope == 2
    assert report.offset == -4
    assert report.kappa_at(5) == 6


def test_martinet():
    report = kappa(ModelSpec.create(martinet(), 4))
    assert (report.C1, report.C3) == (1, 6)
    assert report.kappa == 1
    assert report.b0 == Fraction(7, 2)


def test_abelian_has_no_penalty():
    report = kappa(ModelSpec.create(abelian(2), Fraction(5, 2)))
    assert report.kappa == 5
    assert report.b0 == 0


def test_variants_agree_at_g_zero():
    spec = ModelSpec.create(martinet(), 3)
    standard, optimal, g_zero = kappa(spec), kappa_optimal(spec), kappa_g_zero(spec)
    assert standard.kappa == optimal.kappa == g_zero.kappa == -1
    assert optimal.C1_pairing == 1
    assert optimal.C1_prime == 6
    assert kappa_optimal(ModelSpec.create(heisenberg(), 3)).C1_prime == 4


def test_identity_G_halves_the_commutator_term():
    spec = ModelSpec.create(heisenberg(), 3, G=[[1, 0], [0, 1]])
    report = kappa(spec)
    assert report.delta == 2
    assert report.C3 == 16
    assert report.kappa == -2
    with pytest.raises(PreconditionError):
        kappa_g_zero(spec)


def test_drift_enters_through_c2_and_eta():
    geometry = heisenberg()
    spec = ModelSpec.create(geometry, 3, alpha=tanh_drift(geometry, 1, 0))
    report = kappa(spec)
    assert report.C2 == 2
    assert report.eta == 3
    assert report.kappa == -3


def test_pointwise_with_constant_tensor_matches_kappa():
    spec = ModelSpec.create(martinet(), 5)
    report = kappa_pointwise(spec, ["1/2", -1, 2])
    assert report.C4 == 0
    assert report.kappa == kappa(spec).kappa
    assert report.point == (Fraction(1, 2), Fraction(-1), Fraction(2))
    with pytest.raises(ValueError):
        kappa_pointwise(spec, [0, 0])


def test_kappa_q():
    report = kappa_q(ModelSpec.create(heisenberg(), 3), 2)
    assert report.kappa_q == 2
    assert report.beta_threshold_q == 2
    assert report.kappa_at(4) == 4

    report = kappa_q(ModelSpec.create(martinet(), 5), 2)
    assert report.kappa_q == 2
    assert report.beta_threshold_q == 4


def test_kappa_q_preconditions():
    geometry = heisenberg()
    with pytest.raises(PreconditionError):
        kappa_q(ModelSpec.create(geometry, 3), 1)
    with pytest.raises(PreconditionError):
        kappa_q(ModelSpec.create(geometry, 3, G=[[0, 1], [-1, 0]]), 2)
    with pytest.raises(PreconditionError):
        kappa_q(ModelSpec.create(geometry, 3, alpha=tanh_drift(geometry, 1, 0)), 2)


def test_condition_on_G():
    with pytest.raises(ConditionGError):
        kappa(ModelSpec.create(heisenberg(), 3, G=[[-2, 0], [0, -2]]))
    assert delta_of_G([[Fraction(-1, 2), 0], [0, 3]]) == Fraction(1, 2)


def test_non_diagonal_G_uses_the_eigensolver():
    delta, residual = delta_with_residual(np.array([[0.0, 0.5], [0.5, 0.0]]))
    assert delta == pytest.approx(0.5)
    assert residual < 1e-12


def test_exact_output():
    report = kappa(ModelSpec.create(heisenberg(), "7/2"))
    assert isinstance(report.kappa, Fraction)
    record = report.to_json()
    assert record["kappa"] == "3"
    assert record["exact"] is True
    assert kappa(ModelSpec.create(heisenberg(), 3)).to_json()["kappa"] == "2"

    float_report = kappa(ModelSpec.create(heisenberg(), 3.5))
    assert float_report.to_json()["kappa"] == pytest.approx(3.0)
    assert float_report.to_json()["exact"] is False


def test_undamped_model_is_accepted_with_negative_kappa():
    report = kappa(ModelSpec.create(heisenberg(), 0))
    assert report.kappa == Fraction(-4)
    assert report.beta == 0


def test_beta_must_be_non_negative():
    with pytest.raises(ValueError):
        ModelSpec.create(heisenberg(), "-1/2")
