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
"""Homogeneous gauges, the cutoff ρ = g(N) and the Lyapunov-function assumptions.

The H-type gauge N(x, t) = (|x|⁴ + 16|t|²)^{1/4} lives on R^{m+l} with horizontal
fields X_i = ∂_{x_i} + ½ Σ_s (J^{(s)}x)_i ∂_{t_s}. Its gradient and Hessian are
closed form, so the sub-gradient and sub-Laplacian identities can be checked
pointwise without differencing.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Protocol, Sequence, Union

import numpy as np

from hypocoerce.geometry.interfaces import Geometry

_SYMPLECTIC = np.array([[0.0, -1.0], [1.0, 0.0]])

_QUATERNIONIC = np.array(
    [
        [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]],
        [[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]],
        [[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]],
    ],
    dtype=np.float64,
)


class GaugeDomainError(ValueError):
    """The gauge is not differentiable at the requested point (the origin)."""


class GaugeIdentities(NamedTuple):
    N: float
    subgrad: float
    sublap: float
    DN: float


class Gauge(Protocol):
    """Interface shared by the gauges used for ρ and for configuration distances."""

    dim: int

    def value(self, points: np.ndarray) -> np.ndarray: ...

    def gradient(self, points: np.ndarray) -> np.ndarray: ...

    def hessian(self, points: np.ndarray) -> np.ndarray: ...

    def horizontal_fields(self, points: np.ndarray) -> np.ndarray: ...

    def horizontal_connection(self) -> np.ndarray: ...

    def bounding_box(self, radius: float) -> tuple[float, ...]: ...


@dataclass(frozen=True)
class HTypeGauge:
    """Gauge of an H-type group with horizontal dimension m and centre dimension l."""

    m: int
    l: int
    J: np.ndarray = field(compare=False, repr=False)

    def __post_init__(self) -> None:
        J = np.asarray(self.J, dtype=np.float64)
        if J.shape != (self.l, self.m, self.m):
            raise ValueError(f"J must have shape {(self.l, self.m, self.m)}, got {J.shape}")
        identity = np.eye(self.m)
        for s in range(self.l):
            if not np.allclose(J[s].T, -J[s]):
                raise ValueError(f"J[{s}] is not skew-symmetric")
            for r in range(self.l):
                anti = J[s] @ J[r] + J[r] @ J[s]
                target = -2.0 * identity if r == s else np.zeros_like(identity)
                if not np.allclose(anti, target):
                    raise ValueError(f"J[{s}], J[{r}] violate the H-type relation")
        object.__setattr__(self, "J", J)

    @classmethod
    def heisenberg(cls, k: int = 1) -> "HTypeGauge":
        """Heisenberg group H^k: m = 2k, l = 1 (k = 1 matches the catalog coordinates)."""
        J = np.kron(np.eye(k), _SYMPLECTIC)[None]
        return cls(2 * k, 1, J)

    @classmethod
    def quaternionic(cls) -> "HTypeGauge":
        return cls(4, 3, _QUATERNIONIC)

    @property
    def dim(self) -> int:
        return self.m + self.l

    @property
    def dilation_weights(self) -> tuple[int, ...]:
        return (1,) * self.m + (2,) * self.l

    def _split(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        points = np.asarray(points, dtype=np.float64)
        if points.shape[-1] != self.dim:
            raise ValueError(f"points must have trailing dimension {self.dim}")
        return points[..., : self.m], points[..., self.m :]

    def value(self, points: np.ndarray) -> np.ndarray:
        x, t = self._split(points)
        return (np.sum(x**2, axis=-1) ** 2 + 16.0 * np.sum(t**2, axis=-1)) ** 0.25

    def gradient(self, points: np.ndarray) -> np.ndarray:
        x, t = self._split(points)
        r2 = np.sum(x**2, axis=-1, keepdims=True)
        F = r2[..., 0] ** 2 + 16.0 * np.sum(t**2, axis=-1)
        scale = np.where(F > 0, 0.25 * np.where(F > 0, F, 1.0) ** -0.75, 0.0)[..., None]
        return scale * np.concatenate([4.0 * r2 * x, 32.0 * t], axis=-1)

    def hessian(self, points: np.ndarray) -> np.ndarray:
        x, t = self._split(points)
        r2 = np.sum(x**2, axis=-1)
        F = r2**2 + 16.0 * np.sum(t**2, axis=-1)
        safe = np.where(F > 0, F, 1.0)
        grad_F = np.concatenate([4.0 * r2[..., None] * x, 32.0 * t], axis=-1)
        hess_F = np.zeros(points.shape[:-1] + (self.dim, self.dim))
        hess_F[..., : self.m, : self.m] = 4.0 * (
            r2[..., None, None] * np.eye(self.m) + 2.0 * x[..., :, None] * x[..., None, :]
        )
        hess_F[..., self.m :, self.m :] = 32.0 * np.eye(self.l)
        hess = 0.25 * safe[..., None, None] ** -0.75 * hess_F - (
            3.0 / 16.0
        ) * safe[..., None, None] ** -1.75 * (grad_F[..., :, None] * grad_F[..., None, :])
        return np.where((F > 0)[..., None, None], hess, 0.0)

    def horizontal_fields(self, points: np.ndarray) -> np.ndarray:
        """Rows X_i(point), shape (..., m, m + l)."""
        x, _ = self._split(points)
        fields = np.zeros(x.shape[:-1] + (self.m, self.dim))
        fields[..., :, : self.m] = np.eye(self.m)
        # (J^{(s)} x)_i for every s
        Jx = np.einsum("sij,...j->...is", self.J, x)
        fields[..., :, self.m :] = 0.5 * Jx
        return fields

    def bounding_box(self, radius: float) -> tuple[float, ...]:
        """Half-widths of a box containing {N <= radius}."""
        return (radius,) * self.m + (radius**2 / 4.0,) * self.l

    def horizontal_connection(self) -> np.ndarray:
        """Constant components of ∇_{X_i}X_j, shape (m, m, m + l) indexed [i, j, :]."""
        conn = np.zeros((self.m, self.m, self.dim))
        for s in range(self.l):
            conn[:, :, self.m + s] = 0.5 * self.J[s].T
        return conn

    def gauge_identities(self, point: Sequence[float]) -> GaugeIdentities:
        """N, Σ_i|X_iN|², Σ_iX_i²N and DN at a point other than the origin."""
        point = np.asarray(point, dtype=np.float64)
        if not np.any(point):
            raise GaugeDomainError("the gauge is not smooth at the origin")
        grad = self.gradient(point)
        hess = self.hessian(point)
        fields = self.horizontal_fields(point)
        XN = fields @ grad
        # X_i X_i N = X_i^T Hess X_i; the connection term vanishes on the diagonal
        sublap = float(np.einsum("ia,ab,ib->", fields, hess, fields))
        weights = np.asarray(self.dilation_weights, dtype=np.float64)
        DN = float(np.dot(weights * point, grad))
        return GaugeIdentities(float(self.value(point)), float(np.sum(XN**2)), sublap, DN)

    def expected_identities(self, point: Sequence[float]) -> GaugeIdentities:
        """Closed forms |x|²/N², (m + 2l − 1)|x|²/N³ and DN = N."""
        point = np.asarray(point, dtype=np.float64)
        x, _ = self._split(point)
        N = float(self.value(point))
        r2 = float(np.sum(x**2))
        return GaugeIdentities(N, r2 / N**2, (self.m + 2 * self.l - 1) * r2 / N**3, N)


@dataclass(frozen=True)
class EuclideanGauge:
    """|x| on R^dim with the coordinate fields as horizontal frame."""

    dim: int

    def value(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.asarray(points, dtype=np.float64), axis=-1)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        r = self.value(points)[..., None]
        return np.where(r > 0, points / np.where(r > 0, r, 1.0), 0.0)

    def hessian(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        r = self.value(points)
        safe = np.where(r > 0, r, 1.0)[..., None, None]
        outer = points[..., :, None] * points[..., None, :]
        hess = (np.eye(self.dim) - outer / safe**2) / safe
        return np.where((r > 0)[..., None, None], hess, 0.0)

    def horizontal_fields(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return np.broadcast_to(np.eye(self.dim), points.shape[:-1] + (self.dim, self.dim))

    def bounding_box(self, radius: float) -> tuple[float, ...]:
        return (radius,) * self.dim

    def horizontal_connection(self) -> np.ndarray:
        return np.zeros((self.dim, self.dim, self.dim))


@dataclass(frozen=True)
class DilationQuasiNorm:
    """Σ_i |x_i|^{1/w_i}, homogeneous of degree one under x_i ↦ λ^{w_i}x_i.

    Only used as a distance d(ω_k); it is not smooth and carries no frame.
    """

    weights: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.weights)

    def value(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        powers = 1.0 / np.asarray(self.weights, dtype=np.float64)
        return np.sum(np.abs(points) ** powers, axis=-1)


DistanceGauge = Union[HTypeGauge, EuclideanGauge, DilationQuasiNorm]


def gauge_for(geometry: Geometry) -> DistanceGauge:
    """The homogeneous distance used for configurations of ``geometry``."""
    if geometry.name == "heisenberg":
        return HTypeGauge.heisenberg()
    if geometry.name.startswith("abelian"):
        return EuclideanGauge(geometry.N)
    weights = geometry.dilation_weights()
    if weights is None:
        raise ValueError(f"{geometry.name}: no homogeneous distance for a non-diagonal dilation")
    return DilationQuasiNorm(tuple(float(w) for w in weights))


def gauge_identities(gauge: HTypeGauge, point: Sequence[float]) -> GaugeIdentities:
    return gauge.gauge_identities(point)


@dataclass(frozen=True)
class CutoffRho:
    """g = 0 on [0, a], g(s) = s for s ≥ b, quintic C² bridge on [a, b] (a = 1, b = 2)."""

    a: float = 1.0
    b: float = 2.0

    def __post_init__(self) -> None:
        if (self.a, self.b) != (1.0, 2.0):
            raise ValueError("the quintic bridge is tabulated for the knots a = 1, b = 2")

    # g(1 + u) = 16u³ − 23u⁴ + 9u⁵ on u ∈ [0, 1]
    def value(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        u = np.clip(s - self.a, 0.0, 1.0)
        bridge = u**3 * (16.0 - 23.0 * u + 9.0 * u**2)
        return np.where(s >= self.b, s, np.where(s <= self.a, 0.0, bridge))

    def derivative(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        u = np.clip(s - self.a, 0.0, 1.0)
        bridge = u**2 * (48.0 - 92.0 * u + 45.0 * u**2)
        return np.where(s >= self.b, 1.0, np.where(s <= self.a, 0.0, bridge))

    def second_derivative(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        u = np.clip(s - self.a, 0.0, 1.0)
        bridge = u * (96.0 - 276.0 * u + 180.0 * u**2)
        return np.where((s > self.a) & (s < self.b), bridge, 0.0)


def cutoff_rho(cutoff: CutoffRho, gauge: DistanceGauge, points: np.ndarray) -> np.ndarray:
    """ρ = g(N(points))."""
    return cutoff.value(gauge.value(points))


class LyapunovAssumptionBounds(NamedTuple):
    subgradient_sup: float
    generator_sup: float
    radius: float
    n_points: int


def lyapunov_assumption_bounds(
    gauge: Union[HTypeGauge, EuclideanGauge],
    cutoff: CutoffRho,
    G: Optional[np.ndarray] = None,
    radius: float = 100.0,
    points_per_axis: int = 41,
) -> LyapunovAssumptionBounds:
    """Maxima of Σ_i|X_iρ|² and |Σ_iX_i²ρ + Σ G_ijX_iX_jρ| on a grid over {N ≤ radius}."""
    m = gauge.horizontal_fields(np.zeros(gauge.dim)).shape[-2]
    G = np.zeros((m, m)) if G is None else np.asarray(G, dtype=np.float64)
    if G.shape != (m, m):
        raise ValueError(f"G must be {m}x{m}, got {G.shape}")
    axes = [np.linspace(-w, w, points_per_axis) for w in gauge.bounding_box(radius)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, gauge.dim)
    N = gauge.value(mesh)
    mesh, N = mesh[N <= radius], N[N <= radius]

    grad = gauge.gradient(mesh)
    hess = gauge.hessian(mesh)
    fields = gauge.horizontal_fields(mesh)
    XN = np.einsum("pia,pa->pi", fields, grad)
    # X_iX_jN = X_i^T Hess X_j + (∇_{X_i}X_j)·∇N
    XXN = np.einsum("pia,pab,pjb->pij", fields, hess, fields) + np.einsum(
        "ija,pa->pij", gauge.horizontal_connection(), grad
    )
    g1 = cutoff.derivative(N)
    g2 = cutoff.second_derivative(N)
    subgrad = g1**2 * np.sum(XN**2, axis=-1)
    second = g2[:, None, None] * XN[:, :, None] * XN[:, None, :] + g1[:, None, None] * XXN
    generator = np.trace(second, axis1=1, axis2=2) + np.einsum("ij,pij->p", G, second)
    return LyapunovAssumptionBounds(
        subgradient_sup=float(np.max(subgrad)),
        generator_sup=float(np.max(np.abs(generator))),
        radius=radius,
        n_points=int(mesh.shape[0]),
    )
