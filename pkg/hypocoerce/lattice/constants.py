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
"""Uniform constants of the lattice gradient bounds.

‖Z_{j,r}α_{k,i}‖∞ ≤ a|J_{j−k}|·‖g'‖∞·|Z_r^c| where Z_r^c is the (constant)
c-th component of the site field Z_r. From these:

    M_{k,j} = max_i Σ_r ‖Z_{k,r}α_{j,i}‖∞,
    A_k     = max_r Σ_i ‖Z_{k,r}α_{k,i}‖∞ + max_i Σ_r ‖Z_{k,r}α_{k,i}‖∞
              + Σ_{j≠k} max_r Σ_i ‖Z_{k,r}α_{j,i}‖∞,
    C̃ = (C1 + C2 + C3/δ)/2 from the single-site tensor,
    κ̄ = 2(βλ_* − C̃ − sup_k A_k),   ς = κ̄ − sup_k max_{j≠k} M_{k,j}.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from hypocoerce.constants.interfaces import MissingBoundError, ModelSpec, Scalar, scalar_to_json
from hypocoerce.constants.kappa import (
    c1_pairing,
    c2_constant,
    c3_constant,
    delta_with_residual,
)
from hypocoerce.lattice.model import LatticeModel, Site


@dataclass(frozen=True)
class LatticeConstants:
    kappa_bar: Scalar
    C_tilde: Scalar
    C: Scalar
    A: dict[Site, Scalar]
    # only the non-zero entries, j ≠ k
    M: dict[tuple[Site, Site], Scalar]
    varsigma: Scalar
    beta_threshold: Scalar
    alpha_bound: Scalar
    field_alpha_bound: Scalar

    @property
    def A_sup(self) -> Scalar:
        return max(self.A.values(), default=Fraction(0))

    @property
    def M_sup(self) -> Scalar:
        return max(self.M.values(), default=Fraction(0))

    def M_entry(self, k: Site, j: Site) -> Scalar:
        return self.M.get((k, j), Fraction(0))

    def to_json(self) -> dict[str, Any]:
        return {
            "kappa_bar": scalar_to_json(self.kappa_bar),
            "C_tilde": scalar_to_json(self.C_tilde),
            "C": scalar_to_json(self.C),
            "A_sup": scalar_to_json(self.A_sup),
            "M_sup": scalar_to_json(self.M_sup),
            "varsigma": scalar_to_json(self.varsigma),
            "beta_threshold": scalar_to_json(self.beta_threshold),
            "alpha_bound": scalar_to_json(self.alpha_bound),
            "field_alpha_bound": scalar_to_json(self.field_alpha_bound),
            "M": [
                {"k": list(k), "j": list(j), "value": scalar_to_json(v)}
                for (k, j), v in sorted(self.M.items())
            ],
        }


def coupling_field_coefficients(model: LatticeModel) -> tuple[Fraction, ...]:
    """|Z_r^c| for each site field; the coupled coordinate must enter every Z_r linearly."""
    geometry = model.site_geometry
    c = model.coupling.coordinate
    values = []
    for r, Z in enumerate(geometry.Z):
        component = Z.components[c]
        if not component.is_constant():
            raise MissingBoundError(
                f"{geometry.name}: Z_{r + 1} has a non-constant x{c + 1} component; "
                "the coupling bound is not certified"
            )
        values.append(abs(component.constant_term()))
    return tuple(values)


def lattice_constants(model: LatticeModel) -> LatticeConstants:
    geometry = model.site_geometry
    coupling = model.coupling
    m, n = geometry.m, geometry.n
    a = abs(coupling.amplitude)
    g_prime = coupling.g_prime_bound
    coefficients = coupling_field_coefficients(model)
    sum_r = sum(coefficients, Fraction(0))
    max_r = max(coefficients, default=Fraction(0))

    # single-site part with ‖α_i‖ ≤ a Σ|J|
    single = ModelSpec.create(geometry, model.beta, model.G)
    delta, _ = delta_with_residual(single.G)
    tensor = geometry.c.c
    alpha_bound = a * coupling.stencil_l1
    C1 = c1_pairing(tensor, single.G, n, m)
    C2 = c2_constant(tensor, [alpha_bound] * m, n, m)
    C3 = c3_constant(tensor, single.G_sym(), n, m)
    C_tilde = (C1 + C2 + C3 / delta) / 2

    active = set(model.active)

    def field_bound(k: Site, j: Site, r: int) -> Scalar:
        """‖Z_{k,r}α_{j,i}‖∞ (independent of i)."""
        if j not in active:
            return Fraction(0)
        offset = tuple(x - y for x, y in zip(k, j))
        return a * abs(coupling.weight(offset)) * g_prime * coefficients[r]

    M: dict[tuple[Site, Site], Scalar] = {}
    A: dict[Site, Scalar] = {}
    offsets = [v for v, J in coupling.stencil.items() if J]
    for k in model.sites:
        own = [field_bound(k, k, r) for r in range(n)]
        total = max(own, default=Fraction(0)) * m + sum(own, Fraction(0))
        for v in offsets:
            j = tuple(x - y for x, y in zip(k, v))
            if j == k or j not in active:
                continue
            per_field = [field_bound(k, j, r) for r in range(n)]
            total += m * max(per_field)
            entry = sum(per_field, Fraction(0))
            if entry:
                M[(k, j)] = entry
        A[k] = total

    A_sup = max(A.values(), default=Fraction(0))
    C = C_tilde + A_sup
    lambda_star = geometry.lambda_star
    kappa_bar = 2 * (model.beta * lambda_star - C)
    M_sup = max(M.values(), default=Fraction(0))
    return LatticeConstants(
        kappa_bar=kappa_bar,
        C_tilde=C_tilde,
        C=C,
        A=A,
        M=M,
        varsigma=kappa_bar - M_sup,
        beta_threshold=C / lambda_star,
        alpha_bound=alpha_bound,
        field_alpha_bound=a * max((abs(J) for J in coupling.stencil.values()), default=Fraction(0)) * g_prime * max_r,
    )
