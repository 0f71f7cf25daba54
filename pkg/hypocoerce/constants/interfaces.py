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
from typing import Any, Optional, Sequence, Union

import numpy as np

from hypocoerce.geometry.interfaces import Geometry
from hypocoerce.polyfield.poly import to_fraction
from hypocoerce.semigroup.observables import Observable

# Exact when every input is rational; a float anywhere makes the result a float.
Scalar = Union[Fraction, float]


class ConditionGError(ValueError):
    """G* + I is not positive definite."""


class MissingBoundError(ValueError):
    """A sup-norm bound needed by a constant is absent, infinite or not derivable."""


class PreconditionError(ValueError):
    """An estimator or constant was requested outside the regime it is proved for."""


def as_scalar(value: Any) -> Scalar:
    """Keep floats as floats and everything else (ints, ratios, "3/2") exact."""
    if isinstance(value, (float, np.floating)):
        return float(value)
    return to_fraction(value)


def is_exact(*values: Any) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def scalar_to_json(value: Scalar) -> Union[str, float]:
    return str(value) if isinstance(value, Fraction) else float(value)


@dataclass(frozen=True)
class DriftTerm:
    """One drift coefficient α_i with user-certified sup-norm bounds."""

    observable: Observable
    sup_bound: Scalar
    # ‖Z_kα_i‖∞ for k = 1..n
    field_bounds: tuple[Scalar, ...]
    label: str = ""

    def to_json(self) -> dict[str, Any]:
        return {
            "expression": self.observable.text,
            "label": self.label,
            "sup_bound": scalar_to_json(self.sup_bound),
            "field_bounds": [scalar_to_json(v) for v in self.field_bounds],
        }


@dataclass(frozen=True)
class ModelSpec:
    """The generator data: geometry, damping β, constant G and drifts α_i.

    Use :meth:`create` to build one from loose inputs; it checks the shapes
    and that every certified bound is finite. β = 0 (no damping) is accepted
    for contrast runs, where κ comes out negative. The symmetric part G* must make
    G* + I positive definite, which :func:`hypocoerce.constants.kappa.delta_of_G`
    enforces.
    """

    geometry: Geometry
    beta: Scalar
    G: tuple[tuple[Scalar, ...], ...]
    alpha: tuple[DriftTerm, ...] = field(default=())

    @classmethod
    def create(
        cls,
        geometry: Geometry,
        beta: Any,
        G: Optional[Any] = None,
        alpha: Optional[Sequence[DriftTerm]] = None,
    ) -> "ModelSpec":
        m = geometry.m
        if G is None:
            rows: tuple[tuple[Scalar, ...], ...] = tuple(
                tuple(Fraction(0) for _ in range(m)) for _ in range(m)
            )
        else:
            matrix = G.tolist() if isinstance(G, np.ndarray) else G
            rows = tuple(tuple(as_scalar(v) for v in row) for row in matrix)
            if len(rows) != m or any(len(row) != m for row in rows):
                raise ValueError(f"G must be {m}x{m} for {geometry.name}, got {len(rows)} rows")
        beta_value = as_scalar(beta)
        if beta_value < 0:
            raise ValueError(f"beta must be non-negative, got {beta}")
        drifts = tuple(alpha or ())
        if drifts and len(drifts) != m:
            raise ValueError(f"expected {m} drift terms (one per generator), got {len(drifts)}")
        for i, term in enumerate(drifts):
            if term.observable.dim != geometry.N:
                raise ValueError(f"alpha_{i + 1} lives on R^{term.observable.dim}, not R^{geometry.N}")
            if len(term.field_bounds) != geometry.n:
                raise MissingBoundError(
                    f"alpha_{i + 1}: {len(term.field_bounds)} field bounds for {geometry.n} fields"
                )
            for bound in (term.sup_bound, *term.field_bounds):
                if not np.isfinite(float(bound)):
                    raise MissingBoundError(f"alpha_{i + 1}: bound {bound} is not finite")
        return cls(geometry=geometry, beta=beta_value, G=rows, alpha=drifts)

    def with_beta(self, beta: Any) -> "ModelSpec":
        return ModelSpec.create(self.geometry, beta, self.G, self.alpha)

    @property
    def m(self) -> int:
        return self.geometry.m

    def G_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.G], dtype=np.float64)

    def G_sym(self) -> tuple[tuple[Scalar, ...], ...]:
        """G* = (G + Gᵀ)/2, exact when G is."""
        return tuple(
            tuple((self.G[i][j] + self.G[j][i]) / 2 for j in range(self.m)) for i in range(self.m)
        )

    def G_anti(self) -> tuple[tuple[Scalar, ...], ...]:
        return tuple(
            tuple((self.G[i][j] - self.G[j][i]) / 2 for j in range(self.m)) for i in range(self.m)
        )

    def has_drift(self) -> bool:
        return bool(self.alpha)

    def is_g_zero(self) -> bool:
        return all(v == 0 for row in self.G for v in row)

    def alpha_bounds(self) -> tuple[Scalar, ...]:
        if not self.alpha:
            return tuple(Fraction(0) for _ in range(self.m))
        return tuple(term.sup_bound for term in self.alpha)

    def alpha_field_bounds(self) -> tuple[tuple[Scalar, ...], ...]:
        """Rows indexed by k, columns by i: ‖Z_kα_i‖∞."""
        n = self.geometry.n
        if not self.alpha:
            return tuple(tuple(Fraction(0) for _ in range(self.m)) for _ in range(n))
        return tuple(tuple(term.field_bounds[k] for term in self.alpha) for k in range(n))

    def exact(self) -> bool:
        values = [self.beta, *(v for row in self.G for v in row)]
        for term in self.alpha:
            values.extend([term.sup_bound, *term.field_bounds])
        return is_exact(*values)

    def to_json(self) -> dict[str, Any]:
        return {
            "geometry": self.geometry.name,
            "beta": scalar_to_json(self.beta),
            "G": [[scalar_to_json(v) for v in row] for row in self.G],
            "alpha": [term.to_json() for term in self.alpha],
        }


@dataclass(frozen=True)
class KappaReport:
    """Every constant entering κ = 2βλ_* − C1 − C2 − η − C3/δ (− C4 pointwise).

    ``slope`` and ``offset`` give κ as an affine function of β; ``b0`` is the
    threshold above which κ > 0.
    """

    variant: str
    beta: Scalar
    lambda_star: Scalar
    delta: Scalar
    delta_residual: float
    C1: Scalar
    C2: Scalar
    C3: Scalar
    eta: Scalar
    kappa: Scalar
    b0: Scalar
    C1_prime: Optional[Scalar] = None
    C1_pairing: Optional[Scalar] = None
    C4: Optional[Scalar] = None
    point: Optional[tuple[Scalar, ...]] = None

    @property
    def slope(self) -> Scalar:
        return 2 * self.lambda_star

    @property
    def offset(self) -> Scalar:
        return self.kappa - self.slope * self.beta

    @property
    def exact(self) -> bool:
        return is_exact(self.kappa, self.b0)

    def kappa_at(self, beta: Any) -> Scalar:
        return self.slope * as_scalar(beta) + self.offset

    def to_json(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "variant": self.variant,
            "beta": scalar_to_json(self.beta),
            "lambda_star": scalar_to_json(self.lambda_star),
            "delta": scalar_to_json(self.delta),
            "delta_residual": self.delta_residual,
            "C1": scalar_to_json(self.C1),
            "C2": scalar_to_json(self.C2),
            "C3": scalar_to_json(self.C3),
            "eta": scalar_to_json(self.eta),
            "kappa": scalar_to_json(self.kappa),
            "b0": scalar_to_json(self.b0),
            "kappa_slope": scalar_to_json(self.slope),
            "kappa_offset": scalar_to_json(self.offset),
            "exact": self.exact,
        }
        for key in ("C1_prime", "C1_pairing", "C4"):
            value = getattr(self, key)
            if value is not None:
                record[key] = scalar_to_json(value)
        if self.point is not None:
            record["point"] = [scalar_to_json(v) for v in self.point]
        return record


@dataclass(frozen=True)
class LqReport:
    """Constants of the l_q gradient bound Γ(P_tf)^{q/2} ≤ e^{−κ't}P_tΓ(f)^{q/2}."""

    q: Scalar
    beta: Scalar
    lambda_star: Scalar
    C1: Scalar
    C2: Scalar
    kappa_q: Scalar
    beta_threshold_q: Scalar

    @property
    def slope(self) -> Scalar:
        return self.q * self.lambda_star

    def kappa_at(self, beta: Any) -> Scalar:
        return self.kappa_q + self.slope * (as_scalar(beta) - self.beta)

    def to_json(self) -> dict[str, Any]:
        return {
            "variant": "lq",
            "q": scalar_to_json(self.q),
            "beta": scalar_to_json(self.beta),
            "lambda_star": scalar_to_json(self.lambda_star),
            "C1": scalar_to_json(self.C1),
            "C2": scalar_to_json(self.C2),
            "kappa_q": scalar_to_json(self.kappa_q),
            "beta_threshold_q": scalar_to_json(self.beta_threshold_q),
            "exact": is_exact(self.kappa_q, self.beta_threshold_q),
        }
