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
from hypocoerce.geometry.catalog import abelian
from hypocoerce.sde.integrators import IntegratorConfig, integrate_paths
from hypocoerce.sde.rng import PATH_BLOCK_SIZE, NoiseSource, block_ranges
from hypocoerce.sde.system import assemble_sde


def test_draws_are_a_function_of_their_keys():
    source = NoiseSource(seed=42)
    first = source.normals(step=3, block=1, size=8, channels=2)
    np.testing.assert_array_equal(first, NoiseSource(seed=42).normals(3, 1, 8, 2))
    assert first.shape == (8, 2)


@pytest.mark.parametrize(
    "other",
    [
        lambda: NoiseSource(43).normals(3, 1, 8, 2),
        lambda: NoiseSource(42, stream=1).normals(3, 1, 8, 2),
        lambda: NoiseSource(42).normals(4, 1, 8, 2),
        lambda: NoiseSource(42).normals(3, 2, 8, 2),
    ],
)
def test_every_key_separates_the_draws(other):
    reference = NoiseSource(42).normals(3, 1, 8, 2)
    assert not np.allclose(reference, other())


def test_increments_scale_with_dt():
    source = NoiseSource(5)
    np.testing.assert_allclose(source.increments(0, 0, 4, 3, dt=0.25), 0.5 * source.normals(0, 0, 4, 3))


def test_increment_moments():
    draws = NoiseSource(0).increments(0, 0, 200_000, 1, dt=0.01)
    assert abs(draws.mean()) < 5 * 0.1 / np.sqrt(200_000)
    assert draws.var() == pytest.approx(0.01, rel=0.02)


def test_keys_must_fit_in_a_word():
    with pytest.raises(ValueError):
        NoiseSource(-1)
    with pytest.raises(ValueError):
        NoiseSource(0, stream=2**64)


def test_block_ranges_cover_every_path_once():
    ranges = block_ranges(2500)
    assert ranges[0] == (0, 0, PATH_BLOCK_SIZE)
    assert ranges[-1] == (2, 2048, 2500)
    assert sum(stop - start for _, start, stop in ranges) == 2500
    assert block_ranges(0) == []


def test_paths_read_rows_of_their_block():
    # undamped abelian site: one step moves each path by exactly s·ΔW
    system = assemble_sde(ModelSpec.create(abelian(1), 0))
    n_paths, dt = PATH_BLOCK_SIZE + 3, 0.01
    ensemble = integrate_paths(system, IntegratorConfig(dt=dt, t_end=dt, seed=8, n_paths=n_paths), [0.0], workers=1)
    source = NoiseSource(8)
    expected = np.concatenate(
        [source.increments(0, 0, PATH_BLOCK_SIZE, 1, dt), source.increments(0, 1, 3, 1, dt)]
    )
    np.testing.assert_allclose(ensemble.final(), system.noise_scale * expected, rtol=1e-12)
