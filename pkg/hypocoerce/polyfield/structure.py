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
"""Structure constants and dilation eigenvalues of an adapted field family."""

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Protocol, Sequence

import numpy as np

from hypocoerce.polyfield.vector_field import (
    NoConstantDecompositionError,
    PolyVectorField,
    decompose_constant,
    lie_bracket,
    linear_combination,
)


class StructureConstantError(ValueError):
    """[Z_k, X_j] has no constant-coefficient expansion in the Z family."""

    def __init__(self, k: int, j: int, message: str):
        super().__init__(f"(k={k + 1}, j={j + 1}): {message}")
        self.k = k
        self.j = j


class DilationError(ValueError):
    """[Z_k, D] is not a positive rational multiple of Z_k."""

    def __init__(self, k: int, message: str):
        super().__init__(f"(k={k + 1}): {message}")
        self.k = k


class FieldFamily(Protocol):
    """Anything carrying an adapted family Z_1..Z_n whose first m members are generators."""

    @property
    def Z(self) -> Sequence[PolyVectorField]: ...

    @property
    def m(self) -> int: ...

    @property
    def D(self) -> PolyVectorField: ...


@dataclass(frozen=True)
class StructureTensor:
    """c[k][j][l] with [Z_k, X_j] = Σ_l c_{kjl} Z_l (0-based indices)."""

    c: tuple[tuple[tuple[Fraction, ...], ...], ...]

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def m(self) -> int:
        return len(self.c[0]) if self.c else 0

    def __getitem__(self, index: tuple[int, int, int]) -> Fraction:
        k, j, l = index
        return self.c[k][j][l]

    def nonzero(self) -> dict[tuple[int, int, int], Fraction]:
        return {
            (k, j, l): value
            for k, plane in enumerate(self.c)
            for j, row in enumerate(plane)
            for l, value in enumerate(row)
            if value
        }

    def as_array(self) -> np.ndarray:
        return np.array(
            [[[float(v) for v in row] for row in plane] for plane in self.c], dtype=np.float64
        ).reshape(self.n, self.m, self.n)

    def to_json(self) -> list[list[list[str]]]:
        return [[[str(v) for v in row] for row in plane] for plane in self.c]

    @classmethod
    def from_nested(cls, values: Sequence[Sequence[Sequence[Any]]]) -> "StructureTensor":
        return cls(
            tuple(
                tuple(tuple(Fraction(v) for v in row) for row in plane) for plane in values
            )
        )


def structure_constants(family: FieldFamily) -> StructureTensor:
    """Compute c_{kjl} for k = 1..n, j = 1..m by exact decomposition.

    Raises:
        StructureConstantError: carrying the first offending (k, j) pair.
    """
    Z = list(family.Z)
    generators = Z[: family.m]
    tensor = []
    for k, Zk in enumerate(Z):
        plane = []
        for j, Xj in enumerate(generators):
            bracket = lie_bracket(Zk, Xj)
            try:
                plane.append(decompose_constant(bracket, Z))
            except NoConstantDecompositionError as e:
                raise StructureConstantError(k, j, str(e)) from e
        tensor.append(tuple(plane))
    return StructureTensor(tuple(tensor))


def reconstruct(tensor: StructureTensor, Z: Sequence[PolyVectorField], k: int, j: int) -> PolyVectorField:
    """Σ_l c_{kjl} Z_l."""
    return linear_combination(tensor.c[k][j], Z)


def dilation_eigenvalues(family: FieldFamily) -> tuple[Fraction, ...]:
    """Solve [Z_k, D] = λ_k Z_k exactly for each k and require λ_k > 0."""
    eigenvalues = []
    for k, Zk in enumerate(family.Z):
        bracket = lie_bracket(Zk, family.D)
        try:
            (value,) = decompose_constant(bracket, [Zk])
        except NoConstantDecompositionError as e:
            raise DilationError(k, "bracket with D is not a multiple of Z_k") from e
        if value <= 0:
            raise DilationError(k, f"eigenvalue {value} is not positive")
        eigenvalues.append(value)
    return tuple(eigenvalues)
