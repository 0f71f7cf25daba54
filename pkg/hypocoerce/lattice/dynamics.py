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
"""Lattice SDE: independent single-site dynamics plus the interaction drift on Λ.

States are flat arrays (..., S·N) over the box sites in lexicographic order.
Noise for site k is drawn from its own stream, derived from the site's
coordinates rather than its position in the box, so two boxes (or two active
sets) sharing a seed see identical noise at every common site.
"""

from typing import Any, Optional, Sequence

import numpy as np

from hypocoerce.constants.interfaces import ModelSpec
from hypocoerce.lattice.model import LatticeConfigError, LatticeModel, Site
from hypocoerce.sde.integrators import flow_exp
from hypocoerce.sde.rng import NoiseSource
from hypocoerce.sde.system import SQRT_TWO, SdeSystem
from hypocoerce.semigroup.estimators import (
    Direction,
    EstimatorConfig,
    EstimatorResult,
    as_point,
    directional_samples,
    gamma_result,
)
from hypocoerce.semigroup.observables import Observable

_STREAM_OFFSET = 2**20
_STREAM_BITS = 21


def site_stream(site: Sequence[int]) -> int:
    """Injective 64-bit stream id of a site with |k_i| < 2^20, d ≤ 3."""
    if len(site) > 3:
        raise LatticeConfigError("site streams are defined for d <= 3")
    stream = 0
    for axis, coordinate in enumerate(site):
        if not -_STREAM_OFFSET < coordinate < _STREAM_OFFSET:
            raise LatticeConfigError(f"site coordinate {coordinate} too large for a noise stream")
        stream |= (coordinate + _STREAM_OFFSET) << (_STREAM_BITS * axis)
    return stream


class LatticeSystem:
    """DiffusionProcess over the whole box."""

    def __init__(self, model: LatticeModel, noise_scale: float = SQRT_TWO):
        self.model = model
        self.noise_scale = float(noise_scale)
        spec = ModelSpec.create(model.site_geometry, model.beta, model.G)
        self.site_system = SdeSystem(spec, noise_scale=noise_scale)
        self.streams = tuple(site_stream(s) for s in model.sites)
        coupling = model.coupling
        self._coupled = not coupling.is_zero and bool(model.active)
        self._active_index = np.array([model.index(s) for s in model.active], dtype=np.int64)
        # neighbour index and weight per (active site, stencil entry)
        entries = [(v, float(J)) for v, J in sorted(coupling.stencil.items()) if J]
        self._neighbours = np.array(
            [[model.index(tuple(a + b for a, b in zip(site, v))) for v, _ in entries] for site in model.active],
            dtype=np.int64,
        ).reshape(len(model.active), len(entries))
        self._weights = np.array([J for _, J in entries], dtype=np.float64)
        self._amplitude = float(coupling.amplitude)
        self._c = coupling.coordinate

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def channels(self) -> int:
        return self.model.n_sites * self.model.site_geometry.m

    @property
    def spec(self) -> ModelSpec:
        return self.site_system.spec

    def _sites(self, points: np.ndarray) -> np.ndarray:
        return self.model.site_view(points)

    def _flat(self, values: np.ndarray) -> np.ndarray:
        return values.reshape(values.shape[:-2] + (self.dim,))

    def interaction(self, points: np.ndarray) -> np.ndarray:
        """α_k(ω) for every active site; shape (..., |Λ|)."""
        omega = self._sites(points)
        coords = omega[..., self._neighbours, self._c]  # (..., |Λ|, stencil)
        return self._amplitude * np.sum(self.model.coupling.g(coords) * self._weights, axis=-1)

    def drift(self, points: np.ndarray, ito: bool = False) -> np.ndarray:
        omega = self._sites(points)
        value = self.site_system.drift(omega, ito=ito)
        if self._coupled:
            X_sum = self.site_system.horizontal(omega[..., self._active_index, :]).sum(axis=-2)
            value[..., self._active_index, :] += self.interaction(points)[..., None] * X_sum
        return self._flat(value)

    def diffusion_apply(self, points: np.ndarray, dW: np.ndarray) -> np.ndarray:
        omega = self._sites(points)
        m = self.model.site_geometry.m
        dW_sites = dW.reshape(dW.shape[:-1] + (self.model.n_sites, m))
        return self._flat(self.site_system.diffusion_apply(omega, dW_sites))

    def drift_jvp(self, points: np.ndarray, tangent: np.ndarray, ito: bool = False) -> np.ndarray:
        omega = self._sites(points)
        v = self._sites(tangent)
        value = self.site_system.drift_jvp(omega, v, ito=ito)
        if self._coupled:
            active = omega[..., self._active_index, :]
            v_active = v[..., self._active_index, :]
            X_sum = self.site_system.horizontal(active).sum(axis=-2)
            dX_sum = self.site_system.horizontal_jvp(active, v_active).sum(axis=-2)
            coords = omega[..., self._neighbours, self._c]
            d_coords = v[..., self._neighbours, self._c]
            d_alpha = self._amplitude * np.sum(
                self.model.coupling.g_prime(coords) * d_coords * self._weights, axis=-1
            )
            alpha = self.interaction(points)
            value[..., self._active_index, :] += d_alpha[..., None] * X_sum + alpha[..., None] * dX_sum
        return self._flat(value)

    def diffusion_jvp(self, points: np.ndarray, tangent: np.ndarray, dW: np.ndarray) -> np.ndarray:
        m = self.model.site_geometry.m
        dW_sites = dW.reshape(dW.shape[:-1] + (self.model.n_sites, m))
        return self._flat(
            self.site_system.diffusion_jvp(self._sites(points), self._sites(tangent), dW_sites)
        )

    def increments(self, seed: int, step: int, block: int, size: int, dt: float) -> np.ndarray:
        m = self.model.site_geometry.m
        return np.concatenate(
            [NoiseSource(seed, stream).increments(step, block, size, m, dt) for stream in self.streams],
            axis=-1,
        )

    def __getstate__(self) -> dict[str, Any]:
        return {"model": self.model, "noise_scale": self.noise_scale}

    def __setstate__(self, state: dict[str, Any]) -> None:
        self.__init__(state["model"], state["noise_scale"])  # type: ignore[misc]


class CylinderFunction:
    """f(ω) = Σ_{s ∈ Λ(f)} g(ω_s) for a single-site observable g."""

    def __init__(self, model: LatticeModel, support: Sequence[Sequence[int]], g: Observable):
        if g.dim != model.N:
            raise LatticeConfigError(f"site observable lives on R^{g.dim}, sites on R^{model.N}")
        self.model = model
        self.support: tuple[Site, ...] = tuple(sorted({tuple(s) for s in support}))
        if not self.support:
            raise LatticeConfigError("a cylinder function needs a non-empty support")
        missing = [s for s in self.support if s not in set(model.active)]
        if missing:
            raise LatticeConfigError(f"support sites {missing} are not in the active set")
        self.g = g
        self._indices = np.array([model.index(s) for s in self.support], dtype=np.int64)
        self.site_gamma = g.gamma(model.site_geometry)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        omega = self.model.site_view(points)
        return self.g(omega[..., self._indices, :]).sum(axis=-1)

    def gamma_k(self, site: Sequence[int]) -> "SiteGamma":
        """Γ_k f as a function of the lattice state."""
        return SiteGamma(self, tuple(site))

    def gamma_total(self, points: np.ndarray) -> np.ndarray:
        """Γ_Λ f = Σ_k Γ_k f."""
        omega = self.model.site_view(points)
        return self.site_gamma(omega[..., self._indices, :]).sum(axis=-1)

    @property
    def is_constant(self) -> bool:
        return self.g.is_constant()

    def to_json(self) -> dict[str, Any]:
        return {"support": [list(s) for s in self.support], "site_observable": self.g.text}


class SiteGamma:
    def __init__(self, f: CylinderFunction, site: Site):
        self.f = f
        self.site = site
        self._index = f.model.index(site)
        self._active = site in f.support

    def __call__(self, points: np.ndarray) -> np.ndarray:
        omega = self.f.model.site_view(points)
        if not self._active:
            return np.zeros(omega.shape[:-2])
        return self.f.site_gamma(omega[..., self._index, :])


def site_directions(model: LatticeModel, omega: np.ndarray, site: Sequence[int]) -> list[Direction]:
    """Flows of Z_{k,r} acting on the coordinates of site k only."""
    index = model.index(site)
    base = model.site_view(omega)
    directions = []
    for r, Z in enumerate(model.site_geometry.Z):

        def flow(s: float, Z: Any = Z) -> np.ndarray:
            moved = base.copy()
            moved[index] = flow_exp(Z, base[index], s)
            return moved.reshape(-1)

        velocity = np.zeros_like(base)
        velocity[index] = Z.evaluate_numpy(base[index])
        directions.append(Direction(flow=flow, velocity=velocity.reshape(-1), label=f"Z_{site},{r + 1}"))
    return directions


def estimate_gamma_k(
    system: LatticeSystem,
    f: CylinderFunction,
    omega: Any,
    t: float,
    site: Sequence[int],
    config: EstimatorConfig,
) -> EstimatorResult:
    """Γ_k(P_t^Λ f)(ω) = Σ_r |Z_{k,r}P_t^Λ f(ω)|²."""
    omega = as_point(omega, system.dim)
    if t == 0 or f.is_constant:
        return EstimatorResult.exact(float(f.gamma_k(site)(omega)), config)
    if config.derivative == "tangent":
        raise ValueError("lattice derivatives use common random numbers only")
    directions = site_directions(system.model, omega, site)
    samples, methods = directional_samples(system, f, omega, t, directions, config)
    method = "crn_richardson" if "crn_richardson" in methods else methods[0]
    return gamma_result(samples, config, method)


def sup_over_probes(results: Sequence[EstimatorResult]) -> tuple[int, EstimatorResult]:
    """The probe with the largest estimate, used as the sup-norm proxy."""
    if not results:
        raise LatticeConfigError("the probe set is empty")
    index = int(np.argmax([r.value for r in results]))
    return index, results[index]


def lattice_system(model: LatticeModel, noise_scale: Optional[float] = None) -> LatticeSystem:
    return LatticeSystem(model, noise_scale=SQRT_TWO if noise_scale is None else noise_scale)
