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
"""Catalog of sub-Riemannian geometries with constant structure constants."""

from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

from hypocoerce.geometry.interfaces import Geometry
from hypocoerce.polyfield.poly import Poly
from hypocoerce.polyfield.vector_field import PolyVectorField, lie_bracket

HALF = Fraction(1, 2)


@lru_cache(maxsize=None)
def heisenberg() -> Geometry:
    """X_1 = ∂x − (y/2)∂z, X_2 = ∂y + (x/2)∂z, Z_3 = [X_1, X_2] = ∂z."""
    x, y = Poly.variable(3, 0), Poly.variable(3, 1)
    one, zero = Poly.constant(3, 1), Poly.zero(3)
    X1 = PolyVectorField([one, zero, -y * HALF])
    X2 = PolyVectorField([zero, one, x * HALF])
    Z3 = lie_bracket(X1, X2)
    D = PolyVectorField.euler([1, 1, 2])
    return Geometry.build("heisenberg", [X1, X2], [Z3], D, ("x", "y", "z"))


@lru_cache(maxsize=None)
def grusin() -> Geometry:
    """X_1 = ∂x, X_2 = x∂y, Z_3 = [X_1, X_2] = ∂y."""
    x = Poly.variable(2, 0)
    one, zero = Poly.constant(2, 1), Poly.zero(2)
    X1 = PolyVectorField([one, zero])
    X2 = PolyVectorField([zero, x])
    Z3 = lie_bracket(X1, X2)
    D = PolyVectorField.euler([1, 2])
    return Geometry.build("grusin", [X1, X2], [Z3], D, ("x", "y"))


@lru_cache(maxsize=None)
def martinet() -> Geometry:
    """X_1 = ∂x − y²∂z, X_2 = ∂y, Z_3 = [X_1, X_2] = 2y∂z, Z_4 = [Z_3, X_2] = −2∂z."""
    y = Poly.variable(3, 1)
    one, zero = Poly.constant(3, 1), Poly.zero(3)
    X1 = PolyVectorField([one, zero, -(y**2)])
    X2 = PolyVectorField([zero, one, zero])
    Z3 = lie_bracket(X1, X2)
    Z4 = lie_bracket(Z3, X2)
    D = PolyVectorField.euler([1, 1, 3])
    return Geometry.build("martinet", [X1, X2], [Z3, Z4], D, ("x", "y", "z"))


@lru_cache(maxsize=None)
def abelian(N: int = 1) -> Geometry:
    """Commuting coordinate fields X_i = ∂_i with D = Σ x_i∂_i; the Ornstein-Uhlenbeck oracle."""
    if N < 1:
        raise ValueError(f"abelian geometry needs N >= 1, got {N}")
    generators = [PolyVectorField.coordinate(N, i) for i in range(N)]
    D = PolyVectorField.euler([1] * N)
    names = ("x",) if N == 1 else tuple(f"x{i + 1}" for i in range(N))
    return Geometry.build(f"abelian{N}" if N > 1 else "abelian", generators, [], D, names)


CATALOG: dict[str, Callable[[], Geometry]] = {
    "heisenberg": heisenberg,
    "grusin": grusin,
    "martinet": martinet,
    "abelian": abelian,
}


def get_geometry(name: str, dim: Optional[int] = None) -> Geometry:
    """Look up a catalog geometry; ``dim`` only applies to ``abelian``.

    ``abelianN`` (e.g. ``abelian3``) is accepted as shorthand for ``abelian`` with dim N.
    """
    key = name.strip().lower().replace("š", "s")
    if key.startswith("abelian") and key != "abelian":
        suffix = key[len("abelian") :]
        if not suffix.isdigit():
            raise KeyError(f"unknown geometry {name!r}")
        return abelian(int(suffix))
    if key == "abelian":
        return abelian(dim or 1)
    if key not in CATALOG:
        raise KeyError(f"unknown geometry {name!r}; available: {sorted(CATALOG)}")
    if dim is not None:
        raise ValueError(f"geometry {key!r} has a fixed dimension")
    return CATALOG[key]()
