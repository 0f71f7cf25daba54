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
"""SDE assembly for the generator 𝓛 = Σ(I+G)_{ij}X_iX_j + Σα_iX_i − βD.

With B = √(I+G*) and Y_k = Σ_i B_{ik}X_i the second-order part is ΣY_k², so
the process is

    dξ = b_s(ξ)dt + √2 Σ_k Y_k(ξ)∘dW_k,
    b_s = Σα_iX_i − βD + ½Σ_{ij}G^a_{ij}[X_i, X_j],

in Stratonovich form, with Itô drift b_s + ½Σ_k ∇_{A_k}A_k for the diffusion
columns A_k = √2·Y_k.
"""

import itertools
import math
from typing import Any, Optional, Protocol, Sequence

import numpy as np
import sympy

from hypocoerce.constants.interfaces import ConditionGError, ModelSpec
from hypocoerce.constants.kappa import delta_of_G
from hypocoerce.polyfield.vector_field import (
    MonomialTable,
    PolyVectorField,
    covariant_derivative,
    lie_bracket,
)
from hypocoerce.sde.rng import NoiseSource
from hypocoerce.semigroup.observables import Observable

SQRT_TWO = math.sqrt(2.0)


def sqrt_spd(M: Any, rtol: float = 1e-12) -> np.ndarray:
    """Symmetric square root of a symmetric positive definite matrix."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(float(np.linalg.norm(M)), 1.0)
    if not np.allclose(M, M.T, rtol=0.0, atol=rtol * scale):
        raise ValueError("matrix is not symmetric")
    eigenvalues, eigenvectors = np.linalg.eigh((M + M.T) / 2)
    if eigenvalues[0] <= 0:
        raise ConditionGError(f"matrix is not positive definite: eigenvalue {eigenvalues[0]:.6g}")
    return (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T


def monomial_jacobian(table: MonomialTable, points: np.ndarray) -> np.ndarray:
    """∂(x^e_t)/∂x_j for the monomials of ``table``; returns (..., T, N)."""
    points = np.asarray(points, dtype=np.float64)
    exponents = table.exponents
    columns = []
    for j in range(table.dim):
        lowered = exponents.copy()
        lowered[:, j] = np.maximum(lowered[:, j] - 1, 0)
        values = np.prod(points[..., None, :] ** lowered, axis=-1)
        columns.append(values * exponents[:, j])
    return np.stack(columns, axis=-1)


class DiffusionProcess(Protocol):
    """What the integrators need from a system: fields, their derivatives and noise."""

    @property
    def dim(self) -> int: ...

    @property
    def channels(self) -> int: ...

    def drift(self, points: np.ndarray, ito: bool) -> np.ndarray: ...

    def diffusion_apply(self, points: np.ndarray, dW: np.ndarray) -> np.ndarray: ...

    def drift_jvp(self, points: np.ndarray, tangent: np.ndarray, ito: bool) -> np.ndarray: ...

    def diffusion_jvp(self, points: np.ndarray, tangent: np.ndarray, dW: np.ndarray) -> np.ndarray: ...

    def increments(self, seed: int, step: int, block: int, size: int, dt: float) -> np.ndarray: ...


class _PolyFieldKernel:
    """Float coefficients Σ_k w_k V_k of a fixed family on one monomial table."""

    def __init__(self, fields: Sequence[PolyVectorField], weights: Sequence[float]):
        self.table = MonomialTable(fields)
        self.coeffs = self.table.combine(weights)  # (T, N)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.table.monomials(points) @ self.coeffs

    def jvp(self, points: np.ndarray, tangent: np.ndarray) -> np.ndarray:
        dmono = monomial_jacobian(self.table, points)  # (..., T, N)
        return np.einsum("...tj,ti,...j->...i", dmono, self.coeffs, tangent)


class SdeSystem:
    """Drift and diffusion evaluators for one ModelSpec.

    Points are arrays of shape (..., N); the diffusion matrix has shape
    (..., N, m) with columns A_k = s·Σ_i B_{ik}X_i, s = ``noise_scale``.
    ``noise_scale = 0`` turns off the noise (and the Itô correction with it).
    """

    def __init__(self, spec: ModelSpec, noise_scale: float = SQRT_TWO, stream: int = 0):
        delta_of_G(spec.G)
        self.spec = spec
        self.noise_scale = float(noise_scale)
        self.stream = stream
        geometry = spec.geometry
        m = geometry.m
        G = spec.G_array()
        self.G_sym = (G + G.T) / 2
        self.G_anti = (G - G.T) / 2
        self.B = sqrt_spd(np.eye(m) + self.G_sym)
        self._X = tuple(geometry.X)
        self._X_table = MonomialTable(self._X)
        # column k of A: s Σ_i B_ik X_i, on the X monomials
        self._A_coeffs = self.noise_scale * np.einsum("ik,itn->ktn", self.B, self._X_table.coeffs)

        pairs = list(itertools.combinations(range(m), 2))
        ordered = list(itertools.product(range(m), repeat=2))
        fields = (
            [geometry.D]
            + [lie_bracket(self._X[i], self._X[j]) for i, j in pairs]
            + [covariant_derivative(self._X[i], self._X[j]) for i, j in ordered]
        )
        beta = float(spec.beta)
        strat_weights = [-beta] + [self.G_anti[i, j] for i, j in pairs] + [0.0] * len(ordered)
        correction = 0.5 * self.noise_scale**2
        W = np.eye(m) + self.G_sym
        ito_weights = strat_weights[: 1 + len(pairs)] + [correction * W[i, j] for i, j in ordered]
        self._strat_kernel = _PolyFieldKernel(fields, strat_weights)
        self._ito_kernel = _PolyFieldKernel(fields, ito_weights)
        self._alpha = tuple(term.observable for term in spec.alpha)

    # ------------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.spec.geometry.N

    @property
    def channels(self) -> int:
        return self.spec.geometry.m

    def horizontal(self, points: np.ndarray) -> np.ndarray:
        """X_i(x) stacked as (..., m, N)."""
        return self._X_table(points)

    def horizontal_jvp(self, points: np.ndarray, tangent: np.ndarray) -> np.ndarray:
        """(∂X_i)(x)·v stacked as (..., m, N)."""
        dmono = monomial_jacobian(self._X_table, points)
        return np.einsum("...tj,itn,...j->...in", dmono, self._X_table.coeffs, tangent)

    def _alpha_drift(self, points: np.ndarray) -> np.ndarray:
        X = self.horizontal(points)
        total = np.zeros(np.shape(points))
        for i, alpha in enumerate(self._alpha):
            total += alpha(points)[..., None] * X[..., i, :]
        return total

    def drift(self, points: np.ndarray, ito: bool = False) -> np.ndarray:
        """Stratonovich drift b_s, or the Itô drift when ``ito`` is set."""
        points = np.asarray(points, dtype=np.float64)
        kernel = self._ito_kernel if ito else self._strat_kernel
        value = kernel(points)
        if self._alpha:
            value = value + self._alpha_drift(points)
        return value

    def diffusion(self, points: np.ndarray) -> np.ndarray:
        """The N×m matrix A(x) for every point; shape (..., N, m)."""
        mono = self._X_table.monomials(points)
        return np.einsum("...t,ktn->...nk", mono, self._A_coeffs)

    def diffusion_apply(self, points: np.ndarray, dW: np.ndarray) -> np.ndarray:
        """A(x)·ΔW for points (..., N) and increments broadcastable to (..., m)."""
        mono = self._X_table.monomials(points)
        return np.einsum("...t,ktn,...k->...n", mono, self._A_coeffs, dW)

    def drift_jvp(self, points: np.ndarray, tangent: np.ndarray, ito: bool = False) -> np.ndarray:
        """Directional derivative (∂b)(x)·v."""
        points = np.asarray(points, dtype=np.float64)
        kernel = self._ito_kernel if ito else self._strat_kernel
        value = kernel.jvp(points, tangent)
        if self._alpha:
            X = self.horizontal(points)
            dX = self.horizontal_jvp(points, tangent)
            for i, alpha in enumerate(self._alpha):
                directional = np.sum(alpha.gradient(points) * tangent, axis=-1)
                value = value + directional[..., None] * X[..., i, :] + alpha(points)[..., None] * dX[..., i, :]
        return value

    def diffusion_jvp(self, points: np.ndarray, tangent: np.ndarray, dW: np.ndarray) -> np.ndarray:
        """Σ_k ΔW_k (∂A_k)(x)·v."""
        dmono = monomial_jacobian(self._X_table, points)
        return np.einsum("...tj,ktn,...j,...k->...n", dmono, self._A_coeffs, tangent, dW)

    def increments(self, seed: int, step: int, block: int, size: int, dt: float) -> np.ndarray:
        return NoiseSource(seed, self.stream).increments(step, block, size, self.channels, dt)

    # ------------------------------------------------------------------
    def generator(self, f: Observable, points: np.ndarray) -> np.ndarray:
        """(𝓛f)(x) from the Itô form: b·∇f + ½Σ_k A_kᵀ Hess f A_k."""
        points = np.asarray(points, dtype=np.float64)
        first = np.sum(self.drift(points, ito=True) * f.gradient(points), axis=-1)
        A = self.diffusion(points)
        second = 0.5 * np.einsum("...ik,...ij,...jk->...", A, f.hessian(points), A)
        return first + second

    def __getstate__(self) -> dict[str, Any]:
        return {"spec": self.spec, "noise_scale": self.noise_scale, "stream": self.stream}

    def __setstate__(self, state: dict[str, Any]) -> None:
        self.__init__(state["spec"], state["noise_scale"], state["stream"])  # type: ignore[misc]


def assemble_sde(spec: ModelSpec, noise_scale: float = SQRT_TWO) -> SdeSystem:
    return SdeSystem(spec, noise_scale=noise_scale)


def generator_expression(spec: ModelSpec, f: Observable, noise_scale: Optional[float] = None) -> Observable:
    """𝓛f as a closed-form observable, straight from the operator.

    ``noise_scale`` rescales the symmetric second-order part by s²/2 (1 for s = √2).
    """
    geometry = spec.geometry
    weight = 1.0 if noise_scale is None else 0.5 * noise_scale**2
    G = spec.G_array()
    G_sym = (G + G.T) / 2
    G_anti = (G - G.T) / 2
    X = geometry.X
    first = [f.apply_field(V) for V in X]
    terms = []
    for i, j in itertools.product(range(geometry.m), repeat=2):
        coefficient = weight * ((1.0 if i == j else 0.0) + G_sym[i, j]) + G_anti[i, j]
        if coefficient:
            terms.append(sympy.Float(coefficient) * first[j].apply_field(X[i]).expr)
    for i, term in enumerate(spec.alpha):
        terms.append(term.observable.expr * first[i].expr)
    terms.append(-sympy.Float(float(spec.beta)) * f.apply_field(geometry.D).expr)
    return Observable(sympy.Add(*terms), f.symbols)
