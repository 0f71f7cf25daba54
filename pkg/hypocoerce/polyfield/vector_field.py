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
"""First-order differential operators with polynomial coefficients."""

from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import sympy

from hypocoerce.polyfield.poly import (
    DimensionMismatchError,
    Exponent,
    Poly,
    grlex_key,
    to_fraction,
)


class NoConstantDecompositionError(ValueError):
    """The target field is not a constant-coefficient combination of the basis."""


class LinearDependenceError(ValueError):
    """The basis fields are linearly dependent over the rationals."""


class PolyVectorField:
    """V = Σ_i V^i ∂/∂x_i with every V^i a :class:`Poly` in ``ambient_dim`` variables."""

    def __init__(self, components: Sequence[Poly]):
        components = tuple(components)
        if not components:
            raise ValueError("a vector field needs at least one component")
        dim = len(components)
        for poly in components:
            if poly.nvars != dim:
                raise DimensionMismatchError(
                    f"component in {poly.nvars} variables for a field on R^{dim}"
                )
        self._components = components

    @classmethod
    def from_terms(cls, dim: int, components: Sequence[Mapping[Exponent, Any]]) -> "PolyVectorField":
        """Build from one ``{exponent: coeff}`` mapping per component."""
        if len(components) != dim:
            raise DimensionMismatchError(f"{len(components)} components given for R^{dim}")
        return cls([Poly(dim, terms) for terms in components])

    @classmethod
    def zero(cls, dim: int) -> "PolyVectorField":
        return cls([Poly.zero(dim)] * dim)

    @classmethod
    def coordinate(cls, dim: int, index: int) -> "PolyVectorField":
        """The constant field ∂/∂x_index (0-based)."""
        return cls(
            [Poly.constant(dim, 1) if i == index else Poly.zero(dim) for i in range(dim)]
        )

    @classmethod
    def euler(cls, weights: Sequence[Any]) -> "PolyVectorField":
        """Diagonal dilation field Σ_i w_i x_i ∂/∂x_i."""
        dim = len(weights)
        return cls([Poly.variable(dim, i) * to_fraction(w) for i, w in enumerate(weights)])

    @property
    def components(self) -> tuple[Poly, ...]:
        return self._components

    @property
    def ambient_dim(self) -> int:
        return len(self._components)

    @property
    def degree(self) -> int:
        return max(poly.degree for poly in self._components)

    def is_zero(self) -> bool:
        return all(poly.is_zero() for poly in self._components)

    def _check_dim(self, other: "PolyVectorField") -> None:
        if other.ambient_dim != self.ambient_dim:
            raise DimensionMismatchError(
                f"fields on R^{self.ambient_dim} and R^{other.ambient_dim} cannot be combined"
            )

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        self._check_dim(other)
        return PolyVectorField([a + b for a, b in zip(self._components, other._components)])

    def __sub__(self, other: "PolyVectorField") -> "PolyVectorField":
        self._check_dim(other)
        return PolyVectorField([a - b for a, b in zip(self._components, other._components)])

    def __neg__(self) -> "PolyVectorField":
        return PolyVectorField([-a for a in self._components])

    def scale(self, factor: Any) -> "PolyVectorField":
        """Multiply by a rational constant or by a polynomial function."""
        return PolyVectorField([a * factor for a in self._components])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolyVectorField):
            return NotImplemented
        return self._components == other._components

    def __hash__(self) -> int:
        return hash(self._components)

    def __repr__(self) -> str:
        return "(" + ", ".join(repr(c) for c in self._components) + ")"

    def apply(self, f: Poly) -> Poly:
        return apply_field(self, f)

    def evaluate(self, point: Sequence[Any]) -> tuple[Any, ...]:
        """Exact evaluation at a rational point."""
        return tuple(poly.evaluate(point) for poly in self._components)

    # ------------------------------------------------------------------
    # float kernels for the integrators
    # ------------------------------------------------------------------
    @cached_property
    def _table(self) -> "MonomialTable":
        return MonomialTable([self])

    @cached_property
    def _jacobian_table(self) -> "MonomialTable":
        columns = [
            PolyVectorField([poly.diff(j) for poly in self._components])
            for j in range(self.ambient_dim)
        ]
        return MonomialTable(columns)

    def evaluate_numpy(self, points: np.ndarray) -> np.ndarray:
        """Values V(x) for points of shape (..., N); returns (..., N)."""
        return self._table(points)[..., 0, :]

    def jacobian_numpy(self, points: np.ndarray) -> np.ndarray:
        """Matrix ∂V^i/∂x_j for points of shape (..., N); returns (..., N, N)."""
        # table returns (..., j, i); transpose to (..., i, j)
        return np.swapaxes(self._jacobian_table(points), -1, -2)

    def to_sympy(self, symbols: Sequence[sympy.Symbol]) -> list[sympy.Expr]:
        return [poly.to_sympy(symbols) for poly in self._components]

    def to_records(self) -> list[list[dict[str, Any]]]:
        return [poly.to_records() for poly in self._components]

    @classmethod
    def from_records(cls, dim: int, records: Sequence[Sequence[Mapping[str, Any]]]) -> "PolyVectorField":
        if len(records) != dim:
            raise DimensionMismatchError(f"{len(records)} components given for R^{dim}")
        return cls([Poly.from_records(dim, component) for component in records])

    def __getstate__(self) -> dict[str, Any]:
        return {"_components": self._components}

    def __setstate__(self, state: dict[str, Any]) -> None:
        self._components = state["_components"]


class MonomialTable:
    """Float evaluation of a family of fields sharing one monomial table.

    Calling the table on points of shape (..., N) returns the stacked values
    with shape (..., K, N) for the K fields it was built from.
    """

    def __init__(self, fields: Sequence[PolyVectorField]):
        if not fields:
            raise ValueError("MonomialTable needs at least one field")
        dim = fields[0].ambient_dim
        exponents: set[Exponent] = set()
        for field in fields:
            if field.ambient_dim != dim:
                raise DimensionMismatchError("fields of a table must share the ambient dimension")
            for poly in field.components:
                exponents.update(poly.terms.keys())
        ordered = sorted(exponents, key=grlex_key)
        index = {e: t for t, e in enumerate(ordered)}
        coeffs = np.zeros((len(fields), len(ordered), dim))
        for k, field in enumerate(fields):
            for i, poly in enumerate(field.components):
                for exponent, coeff in poly.terms.items():
                    coeffs[k, index[exponent], i] = float(coeff)
        self.dim = dim
        self.exponents = np.array(ordered, dtype=np.int64).reshape(len(ordered), dim)
        self.coeffs = coeffs

    @property
    def n_fields(self) -> int:
        return self.coeffs.shape[0]

    def monomials(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if points.shape[-1] != self.dim:
            raise DimensionMismatchError(
                f"points have trailing dimension {points.shape[-1]}, expected {self.dim}"
            )
        return np.prod(points[..., None, :] ** self.exponents, axis=-1)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        if self.exponents.shape[0] == 0:
            points = np.asarray(points, dtype=np.float64)
            return np.zeros(points.shape[:-1] + (self.n_fields, self.dim))
        return np.einsum("...t,ktn->...kn", self.monomials(points), self.coeffs)

    def combine(self, weights: Sequence[float]) -> np.ndarray:
        """Coefficients of Σ_k w_k V_k on the shared monomials, shape (T, N)."""
        return np.tensordot(np.asarray(weights, dtype=np.float64), self.coeffs, axes=1)


def apply_field(V: PolyVectorField, f: Poly) -> Poly:
    """Return V f = Σ_i V^i ∂f/∂x_i exactly."""
    if f.nvars != V.ambient_dim:
        raise DimensionMismatchError(
            f"field on R^{V.ambient_dim} applied to a polynomial in {f.nvars} variables"
        )
    result = Poly.zero(f.nvars)
    for i, coeff in enumerate(V.components):
        if coeff.is_zero():
            continue
        partial = f.diff(i)
        if not partial.is_zero():
            result = result + coeff * partial
    return result


def lie_bracket(V: PolyVectorField, W: PolyVectorField) -> PolyVectorField:
    """Return [V, W] = VW − WV, i.e. the field with components V(W^i) − W(V^i)."""
    if V.ambient_dim != W.ambient_dim:
        raise DimensionMismatchError(
            f"bracket of fields on R^{V.ambient_dim} and R^{W.ambient_dim}"
        )
    return PolyVectorField(
        [apply_field(V, w) - apply_field(W, v) for v, w in zip(V.components, W.components)]
    )


def covariant_derivative(V: PolyVectorField, W: PolyVectorField) -> PolyVectorField:
    """Flat derivative ∇_V W, the field with components V(W^i)."""
    if V.ambient_dim != W.ambient_dim:
        raise DimensionMismatchError(
            f"derivative of a field on R^{W.ambient_dim} along a field on R^{V.ambient_dim}"
        )
    return PolyVectorField([apply_field(V, w) for w in W.components])


def linear_combination(coeffs: Iterable[Any], fields: Sequence[PolyVectorField]) -> PolyVectorField:
    coeffs = list(coeffs)
    if len(coeffs) != len(fields):
        raise ValueError(f"{len(coeffs)} coefficients for {len(fields)} fields")
    if not fields:
        raise ValueError("empty combination has no ambient dimension")
    total = PolyVectorField.zero(fields[0].ambient_dim)
    for coeff, field in zip(coeffs, fields):
        if coeff:
            total = total + field.scale(coeff)
    return total


def _coefficient_rows(fields: Sequence[PolyVectorField]) -> list[tuple[int, Exponent]]:
    keys: set[tuple[int, Exponent]] = set()
    for field in fields:
        for i, poly in enumerate(field.components):
            keys.update((i, e) for e in poly.terms)
    return sorted(keys, key=lambda key: (key[0], grlex_key(key[1])))


def decompose_constant(W: PolyVectorField, basis: Sequence[PolyVectorField]) -> tuple[Fraction, ...]:
    """Solve W = Σ_l c_l Z_l for constant rationals c_l.

    The fields are flattened into coefficient vectors indexed by
    (component, exponent) and the resulting linear system is solved exactly.

    Raises:
        LinearDependenceError: if the basis is linearly dependent over Q.
        NoConstantDecompositionError: if W is not in the rational span of the basis.
        DimensionMismatchError: if the fields live on different spaces.
    """
    if not basis:
        raise ValueError("decomposition needs a non-empty basis")
    for field in basis:
        W._check_dim(field)
    if len(set(basis)) != len(basis):
        raise LinearDependenceError("basis contains repeated fields")

    rows = _coefficient_rows(list(basis) + [W])
    if not rows:
        # every field is zero
        raise LinearDependenceError("basis consists of zero fields")

    def column(field: PolyVectorField) -> list[sympy.Rational]:
        values = []
        for i, exponent in rows:
            coeff = field.components[i].terms.get(exponent, Fraction(0))
            values.append(sympy.Rational(coeff.numerator, coeff.denominator))
        return values

    A = sympy.Matrix.hstack(*[sympy.Matrix(column(field)) for field in basis])
    if A.rank() < len(basis):
        raise LinearDependenceError(
            f"the {len(basis)} basis fields span a space of dimension {A.rank()} over Q"
        )
    b = sympy.Matrix(column(W))
    try:
        solution, params = A.gauss_jordan_solve(b)
    except ValueError as e:
        raise NoConstantDecompositionError(
            f"{W!r} is not a constant-coefficient combination of the basis"
        ) from e
    assert not params, "full column rank leaves no free parameters"
    return tuple(to_fraction(sympy.Rational(value)) for value in solution)
