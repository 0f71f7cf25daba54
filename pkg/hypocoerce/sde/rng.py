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
"""Counter-based Gaussian noise.

Every increment is a pure function of (seed, stream, step, block): the draws
for one block of paths at one step come from a Philox generator whose key is
(seed, stream) and whose counter is set from (step, block). The path block, not
the individual path, is the unit of the key: path p takes row p mod
PATH_BLOCK_SIZE of the draws of block p // PATH_BLOCK_SIZE. A path's noise
therefore depends on the block size but not on which worker evaluates its
block or in which order, so results are bit-identical for any degree of
parallelism.
"""

from dataclasses import dataclass

import numpy as np

# Paths are processed in fixed blocks; the block size is part of the noise
# keying and must not depend on the worker count.
PATH_BLOCK_SIZE = 1024

_MAX_WORD = 2**64


@dataclass(frozen=True)
class NoiseSource:
    """Standard normal increments keyed by (seed, stream, step, block).

    Keys address whole path blocks; a single path is a row of its block's draw.

    ``stream`` separates independent noise families that share a seed, e.g.
    lattice sites.
    """

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        for name, value in (("seed", self.seed), ("stream", self.stream)):
            if not 0 <= value < _MAX_WORD:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {value}")

    def generator(self, step: int, block: int) -> np.random.Generator:
        bit_generator = np.random.Philox(
            key=np.array([self.seed, self.stream], dtype=np.uint64),
            counter=np.array([0, step, block, 0], dtype=np.uint64),
        )
        return np.random.Generator(bit_generator)

    def normals(self, step: int, block: int, size: int, channels: int) -> np.ndarray:
        """Draws of shape (size, channels) for the paths of one block at one step."""
        return self.generator(step, block).standard_normal((size, channels))

    def increments(self, step: int, block: int, size: int, channels: int, dt: float) -> np.ndarray:
        """Brownian increments ΔW ~ N(0, dt)."""
        return np.sqrt(dt) * self.normals(step, block, size, channels)


def block_ranges(n_paths: int, block_size: int = PATH_BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """(block index, first path, stop path) for every block covering ``n_paths``.

    >>> block_ranges(5, block_size=2)
    [(0, 0, 2), (1, 2, 4), (2, 4, 5)]
    """
    return [
        (b, start, min(start + block_size, n_paths))
        for b, start in enumerate(range(0, n_paths, block_size))
    ]
