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
"""Observables: closed-form test functions f(x) and their exact derivatives.

Expressions are sympy trees restricted to constants, variables, +, ×,
non-negative integer powers, tanh, sin, cos (the derivative of sin) and exp
(``exp_neg(u)`` is accepted as shorthand for e^{−u}). The set is closed under
differentiation, so Z_kf and Γ(f) are again observables and are evaluated
pathwise through ``sympy.lambdify``.
"""

from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np
import sympy
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from hypocoerce.geometry.interfaces import Geometry
from hypocoerce.polyfield.vector_field import PolyVectorField

_FUNCTIONS: dict[str, Any] = {
    "tanh": sympy.tanh,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "exp_neg": lambda u: sympy.exp(-u),
}
_BOUNDED_FUNCTIONS = (sympy.tanh, sympy.sin, sympy.cos)


class ObservableError(ValueError):
    """The expression is malformed or uses nodes outside the supported set."""


def _check_tree(expr: sympy.Expr, symbols: Sequence[sympy.Symbol]) -> None:
    allowed_symbols = set(symbols)
    for node in sympy.preorder_traversal(expr):
        if isinstance(node, (sympy.Number, sympy.NumberSymbol)):
            continue
        if isinstance(node, sympy.Symbol):
            if node not in allowed_symbols:
                raise ObservableError(f"unknown variable {node.name!r}")
            continue
        if isinstance(node, (sympy.Add, sympy.Mul)):
            continue
        if isinstance(node, sympy.Pow):
            exponent = node.exp
            if not (exponent.is_Integer and exponent >= 0):
                raise ObservableError(f"only non-negative integer powers are supported: {node}")
            continue
        if isinstance(node, (sympy.tanh, sympy.sin, sympy.cos, sympy.exp)):
            continue
        raise ObservableError(f"unsupported node {type(node).__name__} in {expr}")


def _sup_bound(expr: sympy.Expr) -> Optional[float]:
    """A certified bound on sup|expr| over R^N, or None when none is derivable."""
    if isinstance(expr, (sympy.Number, sympy.NumberSymbol)):
        return abs(float(expr))
    if isinstance(expr, _BOUNDED_FUNCTIONS):
        return 1.0
    if isinstance(expr, sympy.exp):
        return 1.0 if expr.args[0].is_nonpositive else None
    if isinstance(expr, sympy.Add):
        bounds = [_sup_bound(arg) for arg in expr.args]
        return None if any(b is None for b in bounds) else float(sum(bounds))  # type: ignore[arg-type]
    if isinstance(expr, sympy.Mul):
        total = 1.0
        for arg in expr.args:
            bound = _sup_bound(arg)
            if bound is None:
                return None
            total *= bound
        return total
    if isinstance(expr, sympy.Pow):
        bound = _sup_bound(expr.base)
        return None if bound is None else bound ** int(expr.exp)
    return None


class Observable:
    """A test function f: R^N → R given by a restricted sympy expression."""

    def __init__(self, expr: Any, symbols: Sequence[sympy.Symbol], text: Optional[str] = None):
        expr = sympy.sympify(expr)
        symbols = tuple(symbols)
        _check_tree(expr, symbols)
        self._expr = expr
        self._symbols = symbols
        self._text = text if text is not None else str(expr)
        self._cache: dict[str, Callable[..., Any]] = {}

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------
    @classmethod
    def parse(
        cls,
        text: str,
        symbols: Sequence[sympy.Symbol],
        aliases: Optional[Mapping[str, sympy.Symbol]] = None,
    ) -> "Observable":
        names: dict[str, Any] = {s.name: s for s in symbols}
        names.update(aliases or {})
        global_dict: dict[str, Any] = {
            "__builtins__": {},
            "Integer": sympy.Integer,
            "Float": sympy.Float,
            "Rational": sympy.Rational,
            "Symbol": sympy.Symbol,
            "pi": sympy.pi,
            "E": sympy.E,
            **_FUNCTIONS,
        }
        try:
            expr = parse_expr(
                text,
                local_dict=names,
                global_dict=global_dict,
                transformations=standard_transformations,
            )
        except ObservableError:
            raise
        except Exception as e:
            raise ObservableError(f"cannot parse observable {text!r}: {e}") from e
        if not isinstance(expr, sympy.Expr):
            raise ObservableError(f"{text!r} is not a scalar expression")
        return cls(expr, symbols, text=text)

    @classmethod
    def for_geometry(cls, text: str, geometry: Geometry) -> "Observable":
        return cls.parse(text, geometry.symbols(), geometry.variable_aliases())

    @classmethod
    def constant(cls, value: Any, symbols: Sequence[sympy.Symbol]) -> "Observable":
        return cls(sympy.sympify(value), symbols)

    # ------------------------------------------------------------------
    # properties
    # ------------------------------------------------------------------
    @property
    def expr(self) -> sympy.Expr:
        return self._expr

    @property
    def symbols(self) -> tuple[sympy.Symbol, ...]:
        return self._symbols

    @property
    def dim(self) -> int:
        return len(self._symbols)

    @property
    def text(self) -> str:
        return self._text

    def is_constant(self) -> bool:
        return not (self._expr.free_symbols & set(self._symbols))

    @property
    def sup_bound(self) -> Optional[float]:
        """Certified ‖f‖∞, when derivable from the tree."""
        return _sup_bound(self._expr)

    @property
    def bounded(self) -> bool:
        return self.sup_bound is not None

    def __repr__(self) -> str:
        return f"Observable({self._text})"

    # ------------------------------------------------------------------
    # symbolic calculus
    # ------------------------------------------------------------------
    def _derived(self, expr: sympy.Expr) -> "Observable":
        return Observable(expr, self._symbols)

    def diff(self, index: int) -> "Observable":
        return self._derived(sympy.diff(self._expr, self._symbols[index]))

    def apply_field(self, V: PolyVectorField) -> "Observable":
        """V f = Σ_i V^i ∂f/∂x_i."""
        if V.ambient_dim != self.dim:
            raise ObservableError(
                f"field on R^{V.ambient_dim} applied to an observable on R^{self.dim}"
            )
        coefficients = V.to_sympy(self._symbols)
        expr = sympy.Add(
            *[
                coeff * sympy.diff(self._expr, symbol)
                for coeff, symbol in zip(coefficients, self._symbols)
                if coeff != 0
            ]
        )
        return self._derived(expr)

    def gradient_form(self, fields: Sequence[PolyVectorField]) -> "Observable":
        """Σ_k |V_k f|², e.g. Γ(f) for the complete family Z."""
        return self._derived(sympy.Add(*[self.apply_field(V).expr ** 2 for V in fields]))

    def gamma(self, geometry: Geometry) -> "Observable":
        """The complete gradient form Γ(f) = Σ_k |Z_kf|²."""
        return self.gradient_form(geometry.Z)

    def subgradient(self, geometry: Geometry, G: Optional[np.ndarray] = None) -> "Observable":
        """Γ̄(f) = Σ_{i,i'} (G_{ii'} + δ_{ii'})(X_if)(X_{i'}f)."""
        weights = np.eye(geometry.m) if G is None else np.eye(geometry.m) + np.asarray(G)
        derivatives = [self.apply_field(X).expr for X in geometry.X]
        expr = sympy.Add(
            *[
                sympy.Float(weights[i, j]) * derivatives[i] * derivatives[j]
                for i in range(geometry.m)
                for j in range(geometry.m)
                if weights[i, j] != 0
            ]
        )
        return self._derived(expr)

    # ------------------------------------------------------------------
    # numerical evaluation
    # ------------------------------------------------------------------
    def _lambdified(self, key: str, exprs: Any) -> Callable[..., Any]:
        if key not in self._cache:
            self._cache[key] = sympy.lambdify(self._symbols, exprs, modules="numpy")
        return self._cache[key]

    def _columns(self, points: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        points = np.asarray(points, dtype=np.float64)
        if points.shape[-1] != self.dim:
            raise ObservableError(
                f"points have trailing dimension {points.shape[-1]}, expected {self.dim}"
            )
        return points, [points[..., i] for i in range(self.dim)]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points, columns = self._columns(points)
        values = self._lambdified("value", self._expr)(*columns)
        return np.array(np.broadcast_to(np.asarray(values, dtype=np.float64), points.shape[:-1]))

    def gradient(self, points: np.ndarray) -> np.ndarray:
        """∂f/∂x_i at points of shape (..., N); returns (..., N)."""
        points, columns = self._columns(points)
        exprs = [sympy.diff(self._expr, s) for s in self._symbols]
        values = self._lambdified("gradient", exprs)(*columns)
        return np.stack(
            [np.broadcast_to(np.asarray(v, dtype=np.float64), points.shape[:-1]) for v in values],
            axis=-1,
        )

    def hessian(self, points: np.ndarray) -> np.ndarray:
        """∂²f/∂x_i∂x_j at points of shape (..., N); returns (..., N, N)."""
        points, columns = self._columns(points)
        exprs = [[sympy.diff(self._expr, a, b) for b in self._symbols] for a in self._symbols]
        values = self._lambdified("hessian", exprs)(*columns)
        rows = [
            np.stack(
                [np.broadcast_to(np.asarray(v, dtype=np.float64), points.shape[:-1]) for v in row],
                axis=-1,
            )
            for row in values
        ]
        return np.stack(rows, axis=-2)

    def __getstate__(self) -> dict[str, Any]:
        return {"_expr": self._expr, "_symbols": self._symbols, "_text": self._text}

    def __setstate__(self, state: dict[str, Any]) -> None:
        self.__dict__.update(state)
        self._cache = {}
