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
from typing import Any, Optional, TypedDict

from hypocoerce.utils.logger import LoggerConfig

KINDS = (
    "geometry",
    "constants",
    "simulate",
    "grad",
    "lq",
    "lyapunov",
    "poincare",
    "expmoment",
    "invariant",
    "lattice_constants",
    "speed",
    "cauchy",
    "ergodicity",
)
LATTICE_KINDS = ("lattice_constants", "speed", "cauchy", "ergodicity")

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_SCHEMA = 2
EXIT_BLOWUP = 3


class AlphaConfig(TypedDict):
    preset: str
    amplitude: Any
    coordinate: int
    stencil: Optional[dict[str, Any]]
    expressions: Optional[list[str]]
    sup_bounds: Optional[list[Any]]
    field_bounds: Optional[list[list[Any]]]


class ModelConfig(TypedDict):
    geometry: Optional[str]
    dim: Optional[int]
    file: Optional[str]
    beta: Any
    G: Optional[list[list[Any]]]
    alpha: AlphaConfig


class IntegratorSection(TypedDict):
    dt: float
    n_paths: int
    seed: int
    scheme: str
    h: float
    richardson: bool
    derivative: str
    max_blowup_fraction: float


class ExperimentSection(TypedDict):
    x: Optional[list[float]]
    t: float
    t_grid: Optional[list[float]]
    observable: str
    kappa: Optional[float]
    variant: str
    q: float
    delta: float
    record_every: Optional[int]
    t_burn: float
    t_sample: float
    thinning: int
    seeds: Optional[list[int]]


class CouplingSection(TypedDict):
    amplitude: Any
    range: int
    weight: Any
    site_function: str
    coordinate: int
    stencil: Optional[dict[str, Any]]


class LatticeSection(TypedDict):
    d: int
    half_width: int
    active_radius: int
    support: list[list[int]]
    site_observable: str
    coupling: CouplingSection
    probes: list[list[float]]
    omega: list[float]
    omega_tilde: list[float]
    max_distance: Optional[int]
    radii: list[int]
    zeta: float
    K: float
    recursion_site: Optional[list[int]]


class OutputConfig(TypedDict):
    dir: Optional[str]
    base_dir: str
    save_trajectories: bool


class MasterConfig(TypedDict):
    kind: str
    model: ModelConfig
    integrator: IntegratorSection
    experiment: ExperimentSection
    lattice: LatticeSection
    output: OutputConfig
    logger: LoggerConfig
    workers: Optional[int]


class RunManifest(TypedDict):
    kind: str
    version: str
    seed: int
    config_hash: str
    config: MasterConfig
    started_at: str
    wall_clock: float
    timings: dict[str, Any]
    verdicts: list[dict[str, Any]]
    exit_code: int
    run_dir: str
    artifacts: list[str]
    replay_of: Optional[str]
