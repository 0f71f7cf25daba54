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
"""Explicit constants of the gradient bounds Γ(P_tf) ≤ e^{−κt}P_tΓ(f).

All sums are plain loops over index tuples so that rational inputs give
exact rational constants. Index conventions follow the structure tensor:
c[k][j][l] with k, l over the full family (n) and j over the generators (m).
"""

import itertools
import logging
from fractions import Fraction
from typing import Any, Optional, Sequence

import numpy as np

from hypocoerce.constants.interfaces import (
    ConditionGError,
    KappaReport,
    LqReport,
    ModelSpec,
    PreconditionError,
    Scalar,
    as_scalar,
    is_exact,
)
from hypocoerce.polyfield.poly import Poly
from hypocoerce.polyfield.vector_field import apply_field

logger = logging.getLogger(__name__)

EIGEN_RESIDUAL_TOLERANCE = 1e-12

# c[k][j][l], either exact Fractions or floats
Tensor = Sequence[Sequence[Sequence[Scalar]]]
Matrix = Sequence[Sequence[Scalar]]


def _matrix(G: Any) -> tuple[tuple[Scalar, ...], ...]:
    rows = G.tolist() if isinstance(G, np.ndarray) else G
    matrix = tuple(tuple(as_scalar(v) for v in row) for row in rows)
    if any(len(row) != len(matrix) for row in matrix):
        raise ValueError("G must be a square matrix")
    return matrix


def delta_with_residual(G: Any) -> tuple[Scalar, float]:
    """δ = λ_min(G* + I) together with the eigen-solver residual ‖Av − δv‖.

    Diagonal rational G* gives δ exactly; otherwise a symmetric eigensolver is used.
    """
    matrix = _matrix(G)
    m = len(matrix)
    sym = [[(matrix[i][j] + matrix[j][i]) / 2 for j in range(m)] for i in range(m)]
    shifted = [[sym[i][j] + (1 if i == j else 0) for j in range(m)] for i in range(m)]
    off_diagonal_zero = all(sym[i][j] == 0 for i in range(m) for j in range(m) if i != j)
    if off_diagonal_zero and is_exact(*(shifted[i][i] for i in range(m))):
        delta: Scalar = min(shifted[i][i] for i in range(m))
        residual = 0.0
    else:
        A = np.array([[float(v) for v in row] for row in shifted], dtype=np.float64)
        eigenvalues, eigenvectors = np.linalg.eigh(A)
        delta = float(eigenvalues[0])
        v = eigenvectors[:, 0]
        residual = float(np.linalg.norm(A @ v - delta * v))
        if residual > EIGEN_RESIDUAL_TOLERANCE:
            logger.warning(f"eigen residual {residual:.3e} above tolerance {EIGEN_RESIDUAL_TOLERANCE}")
    if delta <= 0:
        raise ConditionGError(f"G* + I is not positive definite: smallest eigenvalue {delta}")
    return delta, residual


def delta_of_G(G: Any) -> Scalar:
    """Smallest eigenvalue of (G + Gᵀ)/2 + I; raises ConditionGError when it is ≤ 0."""
    return delta_with_residual(G)[0]


# ----------------------------------------------------------------------
# the individual constants
# ----------------------------------------------------------------------
def c1_pairing(c: Tensor, G: Matrix, n: int, m: int) -> Scalar:
    """sup_k Σ_{n,i,j,l} |G_ij + δ_ij| (|c_kil||c_ljn| + |c_nil||c_ljk|)."""
    weights = {
        (i, j): abs(G[i][j] + (1 if i == j else 0))
        for i, j in itertools.product(range(m), repeat=2)
    }
    best: Scalar = Fraction(0)
    for k in range(n):
        total: Scalar = Fraction(0)
        for (i, j), w in weights.items():
            if w == 0:
                continue
            for p, l in itertools.product(range(n), repeat=2):
                total += w * (abs(c[k][i][l]) * abs(c[l][j][p]) + abs(c[p][i][l]) * abs(c[l][j][k]))
        best = max(best, total)
    return best


def c1_squares(c: Tensor, n: int, m: int) -> Scalar:
    """The second pairing estimate 2Σ_{kjl} c_kjl²."""
    return 2 * sum(
        (c[k][j][l] ** 2 for k, j, l in itertools.product(range(n), range(m), range(n))),
        Fraction(0),
    )


def c2_constant(c: Tensor, alpha_bounds: Sequence[Scalar], n: int, m: int) -> Scalar:
    """sup_k Σ_{i,l} ‖α_i‖∞ (|c_kil| + |c_lik|)."""
    best: Scalar = Fraction(0)
    for k in range(n):
        total: Scalar = Fraction(0)
        for i, l in itertools.product(range(m), range(n)):
            total += alpha_bounds[i] * (abs(c[k][i][l]) + abs(c[l][i][k]))
        best = max(best, total)
    return best


def c3_constant(c: Tensor, G_sym: Matrix, n: int, m: int) -> Scalar:
    """2Σ_{k,l,j} [Σ_i (δ_ij + G*_ij) c_kil]²."""
    total: Scalar = Fraction(0)
    for k, l, j in itertools.product(range(n), range(n), range(m)):
        inner: Scalar = Fraction(0)
        for i in range(m):
            inner += (G_sym[i][j] + (1 if i == j else 0)) * c[k][i][l]
        total += inner**2
    return 2 * total


def eta_constant(field_bounds: Sequence[Sequence[Scalar]], n: int, m: int) -> Scalar:
    """max_k Σ_i ‖Z_kα_i‖∞ + max_i Σ_k ‖Z_kα_i‖∞ (``field_bounds[k][i]``)."""
    by_field = max((sum(field_bounds[k], Fraction(0)) for k in range(n)), default=Fraction(0))
    by_drift = max(
        (sum((field_bounds[k][i] for k in range(n)), Fraction(0)) for i in range(m)),
        default=Fraction(0),
    )
    return by_field + by_drift


def _report(
    spec: ModelSpec,
    variant: str,
    *,
    C1: Scalar,
    C2: Scalar,
    C3: Scalar,
    eta: Scalar,
    delta: Scalar,
    residual: float,
    C4: Optional[Scalar] = None,
    **extra: Any,
) -> KappaReport:
    lambda_star = spec.geometry.lambda_star
    total = C1 + C2 + eta + C3 / delta + (C4 if C4 is not None else 0)
    return KappaReport(
        variant=variant,
        beta=spec.beta,
        lambda_star=lambda_star,
        delta=delta,
        delta_residual=residual,
        C1=C1,
        C2=C2,
        C3=C3,
        eta=eta,
        kappa=2 * spec.beta * lambda_star - total,
        b0=total / (2 * lambda_star),
        C4=C4,
        **extra,
    )


def _constant_terms(spec: ModelSpec, c: Tensor) -> dict[str, Scalar]:
    n, m = spec.geometry.n, spec.m
    return {
        "C1": c1_pairing(c, spec.G, n, m),
        "C2": c2_constant(c, spec.alpha_bounds(), n, m),
        "C3": c3_constant(c, spec.G_sym(), n, m),
    }


# ----------------------------------------------------------------------
# public operations
# ----------------------------------------------------------------------
def kappa(spec: ModelSpec) -> KappaReport:
    """κ = 2βλ_* − C1 − C2 − η − C3/δ for a geometry with constant structure tensor."""
    delta, residual = delta_with_residual(spec.G)
    c = spec.geometry.c.c
    eta = eta_constant(spec.alpha_field_bounds(), spec.geometry.n, spec.m)
    return _report(spec, "standard", eta=eta, delta=delta, residual=residual, **_constant_terms(spec, c))


def kappa_optimal(spec: ModelSpec) -> KappaReport:
    """κ̄ with C̄1 = min(C1, C1'), taking the better of the two pairing estimates."""
    delta, residual = delta_with_residual(spec.G)
    c = spec.geometry.c.c
    terms = _constant_terms(spec, c)
    pairing = terms["C1"]
    squares = c1_squares(c, spec.geometry.n, spec.m)
    terms["C1"] = min(pairing, squares)
    eta = eta_constant(spec.alpha_field_bounds(), spec.geometry.n, spec.m)
    return _report(
        spec,
        "optimal",
        eta=eta,
        delta=delta,
        residual=residual,
        C1_pairing=pairing,
        C1_prime=squares,
        **terms,
    )


def kappa_g_zero(spec: ModelSpec) -> KappaReport:
    """The G = 0 (δ = 1) form of κ evaluated directly on the tensor."""
    if not spec.is_g_zero():
        raise PreconditionError("kappa_g_zero applies to G = 0 only")
    c = spec.geometry.c.c
    n, m = spec.geometry.n, spec.m
    C1: Scalar = Fraction(0)
    for k in range(n):
        total: Scalar = Fraction(0)
        for p, i, l in itertools.product(range(n), range(m), range(n)):
            total += abs(c[k][i][l]) * abs(c[l][i][p]) + abs(c[p][i][l]) * abs(c[l][i][k])
        C1 = max(C1, total)
    C3 = 2 * sum((v**2 for plane in c for row in plane for v in row), Fraction(0))
    return _report(
        spec,
        "g_zero",
        C1=C1,
        C2=c2_constant(c, spec.alpha_bounds(), n, m),
        C3=C3,
        eta=eta_constant(spec.alpha_field_bounds(), n, m),
        delta=Fraction(1),
        residual=0.0,
    )


def _evaluate_tensor(c: Sequence[Sequence[Sequence[Poly]]], point: Sequence[Scalar]) -> list[list[list[Scalar]]]:
    return [[[poly.evaluate(point) for poly in row] for row in plane] for plane in c]


def constant_tensor_polys(spec: ModelSpec) -> list[list[list[Poly]]]:
    dim = spec.geometry.N
    return [
        [[Poly.constant(dim, v) for v in row] for row in plane] for plane in spec.geometry.c.c
    ]


def kappa_pointwise(
    spec: ModelSpec,
    point: Sequence[Any],
    c: Optional[Sequence[Sequence[Sequence[Poly]]]] = None,
) -> KappaReport:
    """κ(x) for polynomial structure functions c_kjl(x), including C4(x).

    C4(x) = sup_k Σ_{j,l} (|X_j c_kjl(x)| + |X_j c_ljk(x)|). Without ``c`` the
    geometry's constant tensor is used, so C4 vanishes and κ(x) equals κ.
    """
    geometry = spec.geometry
    n, m = geometry.n, spec.m
    polys = c if c is not None else constant_tensor_polys(spec)
    if len(polys) != n or any(len(plane) != m or any(len(row) != n for row in plane) for plane in polys):
        raise ValueError(f"structure functions must have shape ({n}, {m}, {n})")
    x = tuple(as_scalar(v) for v in point)
    if len(x) != geometry.N:
        raise ValueError(f"point has {len(x)} coordinates, expected {geometry.N}")
    values = _evaluate_tensor(polys, x)
    derivatives = [
        [[[apply_field(X, poly).evaluate(x) for poly in row] for row in plane] for plane in polys]
        for X in geometry.X
    ]  # derivatives[j'][k][j][l] = X_{j'} c_kjl (x)
    C4: Scalar = Fraction(0)
    for k in range(n):
        total: Scalar = Fraction(0)
        for j, l in itertools.product(range(m), range(n)):
            total += abs(derivatives[j][k][j][l]) + abs(derivatives[j][l][j][k])
        C4 = max(C4, total)
    delta, residual = delta_with_residual(spec.G)
    return _report(
        spec,
        "pointwise",
        eta=eta_constant(spec.alpha_field_bounds(), n, m),
        delta=delta,
        residual=residual,
        C4=C4,
        point=x,
        **_constant_terms(spec, values),
    )


def kappa_q(spec: ModelSpec, q: Any) -> LqReport:
    """Constants of the l_q bound, proved for L_G = L_α = 0.

    C1 = q(½ max_k Σ|c_kil c_lip| + ½ max_p Σ|c_kil c_lip| − βλ_*),
    C2 = q/(q − 1) Σ c²,  κ' = −C1 − C2.
    """
    q_value = as_scalar(q)
    if q_value <= 1:
        raise PreconditionError(f"the l_q bound needs q > 1, got {q}")
    if not spec.is_g_zero() or spec.has_drift():
        raise PreconditionError("the l_q bound is available for G = 0 and alpha = 0 only")
    c = spec.geometry.c.c
    n, m = spec.geometry.n, spec.m
    products = [
        [Fraction(0) for _ in range(n)] for _ in range(n)
    ]  # products[k][p] = Σ_{i,l} |c_kil c_lip|
    for k, p in itertools.product(range(n), repeat=2):
        products[k][p] = sum(
            (abs(c[k][i][l] * c[l][i][p]) for i, l in itertools.product(range(m), range(n))),
            Fraction(0),
        )
    by_row = max(sum(products[k], Fraction(0)) for k in range(n))
    by_column = max(sum((products[k][p] for k in range(n)), Fraction(0)) for p in range(n))
    squares = sum((v**2 for plane in c for row in plane for v in row), Fraction(0))
    lambda_star = spec.geometry.lambda_star
    half_sum = Fraction(1, 2) * by_row + Fraction(1, 2) * by_column
    C1 = q_value * (half_sum - spec.beta * lambda_star)
    C2 = q_value / (q_value - 1) * squares
    return LqReport(
        q=q_value,
        beta=spec.beta,
        lambda_star=lambda_star,
        C1=C1,
        C2=C2,
        kappa_q=-C1 - C2,
        beta_threshold_q=(half_sum + squares / (q_value - 1)) / lambda_star,
    )
