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
"""Exact multivariate polynomials over the rationals.

A :class:`Poly` is a canonical map from exponent multi-indices to non-zero
:class:`fractions.Fraction` coefficients. Arithmetic never touches floating
point; float evaluation is only offered through :meth:`Poly.evaluate_numpy`.
"""

from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import sympy

Exponent = tuple[int, ...]
Scalar = Union[int, Fraction, Rational]

MAX_DEGREE = 16


class PolyDegreeError(ValueError):
    """Raised when a polynomial would exceed :data:`MAX_DEGREE`."""


class DimensionMismatchError(ValueError):
    """Raised when operands live on different ambient dimensions."""


def to_fraction(value: Any) -> Fraction:
    """Convert an exact scalar (int, Fraction, sympy Rational, "p/q" string) to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not polynomial coefficients")
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, (int, Rational, str)):
        return Fraction(value)
    raise TypeError(
        f"coefficient {value!r} of type {type(value).__name__} is not an exact rational"
    )


def grlex_key(exponent: Exponent) -> tuple[int, Exponent]:
    """Sort key for graded-lexicographic order (ascending)."""
    return (sum(exponent), exponent)


class Poly:
    """Polynomial in ``nvars`` variables with exact rational coefficients.

    Instances are immutable; zero coefficients are never stored, so two
    polynomials are equal iff their term maps are equal.
    """

    def __init__(self, nvars: int, terms: Optional[Mapping[Exponent, Any]] = None):
        if nvars < 0:
            raise ValueError(f"nvars must be non-negative, got {nvars}")
        canonical: dict[Exponent, Fraction] = {}
        for exponent, coeff in (terms or {}).items():
            exponent = tuple(int(e) for e in exponent)
            if len(exponent) != nvars:
                raise DimensionMismatchError(
                    f"exponent {exponent} has length {len(exponent)}, expected {nvars}"
                )
            if any(e < 0 for e in exponent):
                raise ValueError(f"negative exponent in {exponent}")
            if sum(exponent) > MAX_DEGREE:
                raise PolyDegreeError(
                    f"monomial degree {sum(exponent)} exceeds the cap of {MAX_DEGREE}"
                )
            value = canonical.get(exponent, Fraction(0)) + to_fraction(coeff)
            if value:
                canonical[exponent] = value
            else:
                canonical.pop(exponent, None)
        self._nvars = nvars
        self._terms = canonical

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value: Scalar) -> "Poly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Poly":
        """The coordinate function x_index (0-based)."""
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for {nvars} variables")
        exponent = [0] * nvars
        exponent[index] = 1
        return cls(nvars, {tuple(exponent): 1})

    @classmethod
    def monomial(cls, exponent: Sequence[int], coeff: Scalar = 1) -> "Poly":
        return cls(len(exponent), {tuple(exponent): coeff})

    # ------------------------------------------------------------------
    # basic properties
    # ------------------------------------------------------------------
    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def terms(self) -> Mapping[Exponent, Fraction]:
        return dict(self._terms)

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        """Terms in graded-lexicographic order, leading term first."""
        return sorted(self._terms.items(), key=lambda item: grlex_key(item[0]), reverse=True)

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1."""
        return max((sum(e) for e in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self._nvars, Fraction(0))

    # ------------------------------------------------------------------
    # arithmetic
    # ------------------------------------------------------------------
    def _coerce(self, other: Any) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise DimensionMismatchError(
                    f"cannot combine polynomials in {self.nvars} and {other.nvars} variables"
                )
            return other
        return Poly.constant(self.nvars, to_fraction(other))

    def __add__(self, other: Any) -> "Poly":
        other = self._coerce(other)
        merged = dict(self._terms)
        for exponent, coeff in other._terms.items():
            merged[exponent] = merged.get(exponent, Fraction(0)) + coeff
        return Poly(self.nvars, merged)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other: Any) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other: Any) -> "Poly":
        other = self._coerce(other)
        product: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                exponent = tuple(a + b for a, b in zip(e1, e2))
                if sum(exponent) > MAX_DEGREE:
                    raise PolyDegreeError(
                        f"product degree {sum(exponent)} exceeds the cap of {MAX_DEGREE}"
                    )
                product[exponent] = product.get(exponent, Fraction(0)) + c1 * c2
        return Poly(self.nvars, product)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Poly":
        if not isinstance(power, int) or power < 0:
            raise ValueError(f"only non-negative integer powers are supported, got {power!r}")
        result = Poly.constant(self.nvars, 1)
        for _ in range(power):
            result = result * self
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Poly.constant(self.nvars, other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self._terms.items())))

    # ------------------------------------------------------------------
    # calculus and evaluation
    # ------------------------------------------------------------------
    def diff(self, index: int) -> "Poly":
        """Partial derivative with respect to x_index (0-based)."""
        if not 0 <= index < self.nvars:
            raise IndexError(f"variable index {index} out of range for {self.nvars} variables")
        result: dict[Exponent, Fraction] = {}
        for exponent, coeff in self._terms.items():
            power = exponent[index]
            if power == 0:
                continue
            lowered = list(exponent)
            lowered[index] -= 1
            result[tuple(lowered)] = coeff * power
        return Poly(self.nvars, result)

    def evaluate(self, point: Sequence[Any]) -> Any:
        """Evaluate at a point; exact when the point has rational entries."""
        if len(point) != self.nvars:
            raise DimensionMismatchError(
                f"point has {len(point)} coordinates, expected {self.nvars}"
            )
        total: Any = Fraction(0)
        for exponent, coeff in self._terms.items():
            term: Any = coeff
            for value, power in zip(point, exponent):
                if power:
                    term = term * value**power
            total = total + term
        return total

    @cached_property
    def _compiled(self) -> tuple[np.ndarray, np.ndarray]:
        items = self.sorted_terms()
        exponents = np.array([e for e, _ in items], dtype=np.int64).reshape(len(items), self.nvars)
        coeffs = np.array([float(c) for _, c in items], dtype=np.float64)
        return exponents, coeffs

    def evaluate_numpy(self, points: np.ndarray) -> np.ndarray:
        """Float evaluation over a batch of points of shape (..., nvars)."""
        points = np.asarray(points, dtype=np.float64)
        if points.shape[-1] != self.nvars:
            raise DimensionMismatchError(
                f"points have trailing dimension {points.shape[-1]}, expected {self.nvars}"
            )
        exponents, coeffs = self._compiled
        if coeffs.size == 0:
            return np.zeros(points.shape[:-1])
        monomials = np.prod(points[..., None, :] ** exponents, axis=-1)
        return monomials @ coeffs

    def to_sympy(self, symbols: Sequence[sympy.Symbol]) -> sympy.Expr:
        if len(symbols) != self.nvars:
            raise DimensionMismatchError(
                f"{len(symbols)} symbols given for a polynomial in {self.nvars} variables"
            )
        expr = sympy.Integer(0)
        for exponent, coeff in self._terms.items():
            term = sympy.Rational(coeff.numerator, coeff.denominator)
            for symbol, power in zip(symbols, exponent):
                term = term * symbol**power
            expr = expr + term
        return expr

    # ------------------------------------------------------------------
    # serialisation
    # ------------------------------------------------------------------
    def to_records(self) -> list[dict[str, Any]]:
        """Term records ``{exponents, num, den}`` in grlex order, leading term first."""
        return [
            {"exponents": list(e), "num": c.numerator, "den": c.denominator}
            for e, c in self.sorted_terms()
        ]

    @classmethod
    def from_records(cls, nvars: int, records: Iterable[Mapping[str, Any]]) -> "Poly":
        terms: dict[Exponent, Fraction] = {}
        for record in records:
            exponent = tuple(int(e) for e in record["exponents"])
            coeff = Fraction(int(record["num"]), int(record.get("den", 1)))
            if exponent in terms:
                raise ValueError(f"duplicate exponent {exponent} in term records")
            terms[exponent] = coeff
        return cls(nvars, terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for exponent, coeff in self.sorted_terms():
            factors = [
                f"x{i + 1}" if p == 1 else f"x{i + 1}^{p}"
                for i, p in enumerate(exponent)
                if p
            ]
            if not factors:
                pieces.append(str(coeff))
            elif coeff == 1:
                pieces.append("*".join(factors))
            elif coeff == -1:
                pieces.append("-" + "*".join(factors))
            else:
                pieces.append(f"{coeff}*" + "*".join(factors))
        return " + ".join(pieces).replace("+ -", "- ")
