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
"""Finite-volume lattice of coupled site copies of a geometry.

Every site of the box B carries the single-site dynamics; sites of the
active set Λ ⊆ B additionally carry the interaction drift

    α_{k,i}(ω) = a Σ_{|v| ≤ R} J_v g(ω_{k+v, c}),  the same for every i,

with g ∈ {tanh, sin} applied to coordinate c of the neighbouring sites.
Distances on ℤ^d are ℓ¹.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from hypocoerce.constants.interfaces import Scalar, as_scalar
from hypocoerce.geometry.catalog import get_geometry
from hypocoerce.geometry.interfaces import Geometry

logger = logging.getLogger(__name__)

Site = tuple[int, ...]

SITE_FUNCTIONS = {
    "tanh": (np.tanh, lambda s: 1.0 - np.tanh(s) ** 2),
    "sin": (np.sin, np.cos),
}


class LatticeConfigError(ValueError):
    """The lattice parameters are inconsistent (Λ ⊄ B, stencil leaving the box, ...)."""


def l1(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(abs(x - y) for x, y in zip(a, b))


def distance_to_set(site: Site, sites: Iterable[Site]) -> int:
    return min(l1(site, other) for other in sites)


@dataclass(frozen=True)
class CouplingSpec:
    amplitude: Scalar
    # offset v -> J_v, with |v|_1 <= range
    stencil: Mapping[Site, Scalar]
    site_function: str = "tanh"
    coordinate: int = 0

    def __post_init__(self) -> None:
        if self.site_function not in SITE_FUNCTIONS:
            raise LatticeConfigError(
                f"site_function must be one of {sorted(SITE_FUNCTIONS)}, got {self.site_function!r}"
            )
        dims = {len(v) for v in self.stencil}
        if len(dims) > 1:
            raise LatticeConfigError(f"stencil offsets have mixed dimensions {sorted(dims)}")

    @classmethod
    def neighbours(cls, d: int, R: int, amplitude: Any, weight: Any = 1, **kwargs: Any) -> "CouplingSpec":
        """J_v = weight for 1 ≤ |v| ≤ R, no self-interaction."""
        stencil = {
            v: as_scalar(weight)
            for v in itertools.product(range(-R, R + 1), repeat=d)
            if 1 <= sum(abs(c) for c in v) <= R
        }
        return cls(amplitude=as_scalar(amplitude), stencil=stencil, **kwargs)

    @classmethod
    def from_stencil_json(cls, amplitude: Any, stencil: Mapping[str, Any], **kwargs: Any) -> "CouplingSpec":
        """Stencil written as in :meth:`to_json`: ``{"1,0": "1/2", "-1,0": "1/2"}``."""
        parsed: dict[Site, Scalar] = {}
        for key, J in stencil.items():
            try:
                offset = tuple(int(c) for c in str(key).split(","))
            except ValueError as e:
                raise LatticeConfigError(f"stencil offset {key!r} is not a comma-separated integer vector") from e
            if not any(offset):
                raise LatticeConfigError("the stencil must not contain the zero offset")
            parsed[offset] = as_scalar(J)
        return cls(amplitude=as_scalar(amplitude), stencil=parsed, **kwargs)

    @property
    def range(self) -> int:
        return max((sum(abs(c) for c in v) for v, J in self.stencil.items() if J), default=0)

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0 or not any(self.stencil.values())

    def weight(self, offset: Site) -> Scalar:
        return self.stencil.get(tuple(offset), Fraction(0))

    @property
    def stencil_l1(self) -> Scalar:
        return sum((abs(J) for J in self.stencil.values()), Fraction(0))

    def g(self, s: np.ndarray) -> np.ndarray:
        return SITE_FUNCTIONS[self.site_function][0](s)

    def g_prime(self, s: np.ndarray) -> np.ndarray:
        return SITE_FUNCTIONS[self.site_function][1](s)

    @property
    def g_prime_bound(self) -> Fraction:
        # |tanh'| ≤ 1 and |cos| ≤ 1
        return Fraction(1)

    def to_json(self) -> dict[str, Any]:
        return {
            "amplitude": str(self.amplitude) if isinstance(self.amplitude, Fraction) else self.amplitude,
            "stencil": {",".join(map(str, v)): str(J) for v, J in sorted(self.stencil.items())},
            "site_function": self.site_function,
            "coordinate": self.coordinate,
        }


@dataclass(frozen=True)
class LatticeModel:
    d: int
    box: tuple[tuple[int, int], ...]
    active: tuple[Site, ...]
    site_geometry: Geometry
    beta: Scalar
    G: tuple[tuple[Scalar, ...], ...]
    coupling: CouplingSpec
    sites: tuple[Site, ...] = field(default=())

    @property
    def N(self) -> int:
        return self.site_geometry.N

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def dim(self) -> int:
        return self.n_sites * self.N

    @property
    def R(self) -> int:
        return self.coupling.range

    def index(self, site: Sequence[int]) -> int:
        try:
            return self._index_map[tuple(site)]
        except KeyError as e:
            raise LatticeConfigError(f"site {tuple(site)} is outside the box") from e

    @property
    def _index_map(self) -> dict[Site, int]:
        cached = self.__dict__.get("_index_cache")
        if cached is None:
            cached = {s: i for i, s in enumerate(self.sites)}
            object.__setattr__(self, "_index_cache", cached)
        return cached

    def in_box(self, site: Sequence[int]) -> bool:
        return all(lo <= c <= hi for c, (lo, hi) in zip(site, self.box))

    def distance_to_boundary(self, site: Sequence[int]) -> int:
        """ℓ¹ distance from ``site`` to the nearest lattice point outside the box."""
        return min(min(c - lo, hi - c) + 1 for c, (lo, hi) in zip(site, self.box))

    def with_active(self, active: Iterable[Sequence[int]]) -> "LatticeModel":
        return _validated(
            self.d, self.box, active, self.site_geometry, self.beta, self.G, self.coupling, margin=0
        )

    def ball(self, centre: Iterable[Sequence[int]], radius: int) -> tuple[Site, ...]:
        """Active sites within ℓ¹ distance ``radius`` of the set ``centre``."""
        centre = [tuple(c) for c in centre]
        return tuple(s for s in self.active if distance_to_set(s, centre) <= radius)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dim)

    def site_view(self, flat: np.ndarray) -> np.ndarray:
        """Reshape (..., S·N) states to (..., S, N)."""
        flat = np.asarray(flat, dtype=np.float64)
        return flat.reshape(flat.shape[:-1] + (self.n_sites, self.N))

    def configuration(self, values: Optional[Mapping[Sequence[int], Sequence[float]]] = None) -> np.ndarray:
        """Flat configuration, zero except at the given sites."""
        omega = np.zeros((self.n_sites, self.N))
        for site, value in (values or {}).items():
            omega[self.index(site)] = np.asarray(value, dtype=np.float64)
        return omega.reshape(-1)

    def to_json(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "box": [list(b) for b in self.box],
            "active": [list(s) for s in self.active],
            "site_geometry": self.site_geometry.name,
            "beta": str(self.beta) if isinstance(self.beta, Fraction) else self.beta,
            "G": [[str(v) if isinstance(v, Fraction) else v for v in row] for row in self.G],
            "range": self.R,
            "coupling": self.coupling.to_json(),
        }


def _validated(
    d: int,
    box: Sequence[Sequence[int]],
    active: Iterable[Sequence[int]],
    site_geometry: Geometry,
    beta: Any,
    G: Any,
    coupling: CouplingSpec,
    margin: Optional[int],
) -> LatticeModel:
    box_t = tuple((int(lo), int(hi)) for lo, hi in box)
    if len(box_t) != d or any(lo > hi for lo, hi in box_t):
        raise LatticeConfigError(f"box must give {d} non-empty (lo, hi) ranges, got {box_t}")
    sites = tuple(itertools.product(*(range(lo, hi + 1) for lo, hi in box_t)))
    active_t = tuple(sorted({tuple(int(c) for c in s) for s in active}))
    if any(len(s) != d for s in active_t):
        raise LatticeConfigError(f"active sites must have {d} coordinates")
    if coupling.stencil and len(next(iter(coupling.stencil))) != d:
        raise LatticeConfigError(f"stencil offsets must have {d} coordinates")
    if not 0 <= coupling.coordinate < site_geometry.N:
        raise LatticeConfigError(f"coupling coordinate {coupling.coordinate} outside R^{site_geometry.N}")
    m = site_geometry.m
    if G is None:
        G_t: tuple[tuple[Scalar, ...], ...] = tuple(tuple(Fraction(0) for _ in range(m)) for _ in range(m))
    else:
        rows = G.tolist() if isinstance(G, np.ndarray) else G
        G_t = tuple(tuple(as_scalar(v) for v in row) for row in rows)
        if len(G_t) != m or any(len(row) != m for row in G_t):
            raise LatticeConfigError(f"G must be {m}x{m}")
    model = LatticeModel(
        d=d,
        box=box_t,
        active=active_t,
        site_geometry=site_geometry,
        beta=as_scalar(beta),
        G=G_t,
        coupling=coupling,
        sites=sites,
    )
    for site in active_t:
        if not model.in_box(site):
            raise LatticeConfigError(f"active site {site} is outside the box {box_t}")
        if coupling.is_zero:
            continue
        for v, J in coupling.stencil.items():
            neighbour = tuple(a + b for a, b in zip(site, v))
            if J and not model.in_box(neighbour):
                raise LatticeConfigError(f"stencil of active site {site} reaches {neighbour} outside the box")
    if margin is not None and active_t:
        needed = model.R + margin
        closest = min(model.distance_to_boundary(s) for s in active_t)
        if closest < needed:
            logger.warning(
                f"active set is {closest} sites from the box boundary; range + margin is {needed}"
            )
    return model


def build_lattice(
    d: int,
    box: Sequence[Sequence[int]],
    active: Iterable[Sequence[int]],
    site_geometry: Any = "heisenberg",
    beta: Any = 1,
    G: Any = None,
    coupling: Optional[CouplingSpec] = None,
    margin: int = 1,
) -> LatticeModel:
    """Assemble and validate a lattice model.

    ``site_geometry`` is a Geometry or a catalog name. Without ``coupling``
    the sites are independent (a = 0). A warning is logged when Λ comes closer
    to the box boundary than range + ``margin``.
    """
    geometry = get_geometry(site_geometry) if isinstance(site_geometry, str) else site_geometry
    coupling = coupling if coupling is not None else CouplingSpec(amplitude=Fraction(0), stencil={})
    return _validated(d, box, active, geometry, beta, G, coupling, margin)


def centred_box(d: int, half_width: int) -> tuple[tuple[int, int], ...]:
    return tuple((-half_width, half_width) for _ in range(d))
