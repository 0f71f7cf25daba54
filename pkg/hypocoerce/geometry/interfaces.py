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
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

import sympy

from hypocoerce.polyfield.structure import (
    StructureTensor,
    dilation_eigenvalues,
    structure_constants,
)
from hypocoerce.polyfield.vector_field import PolyVectorField


class GeometryValidationError(ValueError):
    """A geometry record is inconsistent with its own fields."""


@dataclass(frozen=True)
class Geometry:
    """An adapted family Z_1..Z_n on R^N whose first m members generate.

    ``c`` and ``lam`` are always the exact structure constants and dilation
    eigenvalues of ``Z`` and ``D``; :meth:`build` computes them and
    :meth:`validate` re-derives them for records read from disk.
    """

    name: str
    m: int
    Z: tuple[PolyVectorField, ...]
    D: PolyVectorField
    c: StructureTensor
    lam: tuple[Fraction, ...]
    coordinate_names: tuple[str, ...] = field(default=())

    @classmethod
    def build(
        cls,
        name: str,
        generators: Sequence[PolyVectorField],
        brackets: Sequence[PolyVectorField],
        D: PolyVectorField,
        coordinate_names: Optional[Sequence[str]] = None,
    ) -> "Geometry":
        Z = tuple(generators) + tuple(brackets)
        if not generators:
            raise GeometryValidationError(f"{name}: at least one generator is required")
        dims = {V.ambient_dim for V in Z} | {D.ambient_dim}
        if len(dims) != 1:
            raise GeometryValidationError(f"{name}: fields live on different spaces {sorted(dims)}")
        probe = _Family(Z, len(generators), D)
        names = tuple(coordinate_names) if coordinate_names else ()
        if names and len(names) != D.ambient_dim:
            raise GeometryValidationError(
                f"{name}: {len(names)} coordinate names for R^{D.ambient_dim}"
            )
        return cls(
            name=name,
            m=len(generators),
            Z=Z,
            D=D,
            c=structure_constants(probe),
            lam=dilation_eigenvalues(probe),
            coordinate_names=names,
        )

    @property
    def N(self) -> int:
        return self.D.ambient_dim

    @property
    def n(self) -> int:
        return len(self.Z)

    @property
    def X(self) -> tuple[PolyVectorField, ...]:
        return self.Z[: self.m]

    @property
    def lambda_star(self) -> Fraction:
        return min(self.lam)

    def symbols(self) -> tuple[sympy.Symbol, ...]:
        return tuple(sympy.Symbol(f"x{i + 1}", real=True) for i in range(self.N))

    def variable_aliases(self) -> dict[str, sympy.Symbol]:
        """Names accepted in observable expressions: x1..xN plus the coordinate names."""
        symbols = self.symbols()
        aliases = {s.name: s for s in symbols}
        for alias, symbol in zip(self.coordinate_names, symbols):
            aliases.setdefault(alias, symbol)
        return aliases

    def dilation_weights(self) -> Optional[tuple[Fraction, ...]]:
        """Weights w_i when D = Σ w_i x_i ∂_i, else None."""
        weights = []
        for i, component in enumerate(self.D.components):
            expected_exponent = tuple(1 if j == i else 0 for j in range(self.N))
            terms = component.terms
            if set(terms) != {expected_exponent}:
                return None
            weights.append(terms[expected_exponent])
        return tuple(weights)

    def validate(self) -> None:
        probe = _Family(self.Z, self.m, self.D)
        if structure_constants(probe) != self.c:
            raise GeometryValidationError(f"{self.name}: stored structure constants are wrong")
        if dilation_eigenvalues(probe) != self.lam:
            raise GeometryValidationError(f"{self.name}: stored dilation eigenvalues are wrong")

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "N": self.N,
            "m": self.m,
            "n": self.n,
            "coordinate_names": list(self.coordinate_names),
            "Z": [V.to_records() for V in self.Z],
            "D": self.D.to_records(),
            "lambda": [str(v) for v in self.lam],
            "lambda_star": str(self.lambda_star),
            "c": self.c.to_json(),
            "c_nonzero": [
                {"k": k + 1, "j": j + 1, "l": l + 1, "value": str(v)}
                for (k, j, l), v in sorted(self.c.nonzero().items())
            ],
        }

    @classmethod
    def from_json(cls, record: dict[str, Any]) -> "Geometry":
        dim = int(record["N"])
        Z = tuple(PolyVectorField.from_records(dim, V) for V in record["Z"])
        D = PolyVectorField.from_records(dim, record["D"])
        m = int(record["m"])
        geometry = cls.build(
            record.get("name", "custom"),
            Z[:m],
            Z[m:],
            D,
            record.get("coordinate_names") or None,
        )
        if "c" in record and StructureTensor.from_nested(record["c"]) != geometry.c:
            raise GeometryValidationError(f"{geometry.name}: record c disagrees with the fields")
        if "lambda" in record and tuple(Fraction(v) for v in record["lambda"]) != geometry.lam:
            raise GeometryValidationError(f"{geometry.name}: record lambda disagrees with the fields")
        return geometry


@dataclass(frozen=True)
class _Family:
    Z: tuple[PolyVectorField, ...]
    m: int
    D: PolyVectorField
