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
"""Bounded drift presets α_i with analytically certified sup-norm bounds.

Polynomial drifts are unbounded on R^N, so the presets compose a bounded
function with one coordinate: α_i(x) = a·φ(x_c) for φ ∈ {tanh, sin}. Since
|φ| ≤ 1 and |φ'| ≤ 1, ‖α_i‖∞ = |a| and ‖Z_kα_i‖∞ ≤ |a|·|Z_k^c| whenever the
c-th component of Z_k is a constant. Presets are rejected otherwise.
"""

from fractions import Fraction
from typing import Any, Callable, Optional, Sequence

import sympy

from hypocoerce.constants.interfaces import DriftTerm, MissingBoundError, Scalar, as_scalar
from hypocoerce.geometry.interfaces import Geometry
from hypocoerce.semigroup.observables import Observable


def _coordinate_field_bounds(geometry: Geometry, coordinate: int, amplitude: Scalar) -> tuple[Scalar, ...]:
    bounds = []
    for k, Z in enumerate(geometry.Z):
        component = Z.components[coordinate]
        if not component.is_constant():
            raise MissingBoundError(
                f"{geometry.name}: Z_{k + 1} has non-constant component along "
                f"x{coordinate + 1} ({component}); no certified bound for Z_{k + 1}alpha"
            )
        bounds.append(abs(amplitude) * abs(component.constant_term()))
    return tuple(bounds)


def _composed_preset(
    fn: Callable[[sympy.Expr], sympy.Expr], label: str
) -> Callable[[Geometry, Any, int], tuple[DriftTerm, ...]]:
    def preset(geometry: Geometry, amplitude: Any = 1, coordinate: int = 0) -> tuple[DriftTerm, ...]:
        if not 0 <= coordinate < geometry.N:
            raise ValueError(f"coordinate {coordinate} out of range for R^{geometry.N}")
        a = as_scalar(amplitude)
        if a == 0:
            return zero_drift(geometry)
        symbols = geometry.symbols()
        amplitude_expr = sympy.Rational(a.numerator, a.denominator) if isinstance(a, Fraction) else a
        observable = Observable(amplitude_expr * fn(symbols[coordinate]), symbols)
        field_bounds = _coordinate_field_bounds(geometry, coordinate, a)
        term = DriftTerm(
            observable=observable,
            sup_bound=abs(a),
            field_bounds=field_bounds,
            label=f"{label}(x{coordinate + 1})",
        )
        return tuple(term for _ in range(geometry.m))

    return preset


def zero_drift(geometry: Geometry, amplitude: Any = 0, coordinate: int = 0) -> tuple[DriftTerm, ...]:
    return ()


tanh_drift = _composed_preset(sympy.tanh, "tanh")
sin_drift = _composed_preset(sympy.sin, "sin")

ALPHA_PRESETS: dict[str, Callable[..., tuple[DriftTerm, ...]]] = {
    "zero": zero_drift,
    "tanh": tanh_drift,
    "sin": sin_drift,
}


def custom_drift(
    geometry: Geometry,
    expressions: Sequence[str],
    sup_bounds: Optional[Sequence[Any]],
    field_bounds: Optional[Sequence[Sequence[Any]]],
) -> tuple[DriftTerm, ...]:
    """Drifts from user expressions; the bounds are taken on trust but must be present.

    ``field_bounds[i][k]`` is the declared ‖Z_kα_i‖∞.
    """
    if len(expressions) != geometry.m:
        raise ValueError(f"{geometry.name} needs {geometry.m} drift expressions, got {len(expressions)}")
    if sup_bounds is None or field_bounds is None:
        raise MissingBoundError("custom drifts need declared sup_bounds and field_bounds")
    if len(sup_bounds) != geometry.m or len(field_bounds) != geometry.m:
        raise MissingBoundError(f"custom drifts need bounds for all {geometry.m} terms")
    terms = []
    for i, text in enumerate(expressions):
        observable = Observable.for_geometry(text, geometry)
        row = field_bounds[i]
        if len(row) != geometry.n:
            raise MissingBoundError(f"alpha_{i + 1}: need {geometry.n} field bounds, got {len(row)}")
        terms.append(
            DriftTerm(
                observable=observable,
                sup_bound=as_scalar(sup_bounds[i]),
                field_bounds=tuple(as_scalar(v) for v in row),
                label="custom",
            )
        )
    return tuple(terms)


def alpha_preset(name: str, geometry: Geometry, amplitude: Any = 1, coordinate: int = 0) -> tuple[DriftTerm, ...]:
    if name not in ALPHA_PRESETS:
        raise ValueError(f"unknown alpha preset {name!r}; choose one of {sorted(ALPHA_PRESETS)}")
    return ALPHA_PRESETS[name](geometry, amplitude, coordinate)
