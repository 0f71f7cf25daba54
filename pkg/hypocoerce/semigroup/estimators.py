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
"""Monte Carlo estimators of P_tf, Z_kP_tf and Γ(P_tf).

Directional derivatives use common random numbers: the initial points
flow_exp(Z_k, x, ±h) are integrated as one batch against the same noise, so
the difference quotient is taken path by path. When the h and h/2 quotients
disagree by more than a tenth of the statistical error, the Richardson
combination (4D(h/2) − D(h))/3 is used instead.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

from hypocoerce.constants.interfaces import ModelSpec
from hypocoerce.polyfield.vector_field import PolyVectorField
from hypocoerce.sde.integrators import (
    IntegratorConfig,
    PathEnsemble,
    Scheme,
    flow_exp,
    integrate_paths,
)
from hypocoerce.sde.system import DiffusionProcess, SdeSystem, assemble_sde
from hypocoerce.semigroup.observables import Observable

logger = logging.getLogger(__name__)

ObservableLike = Union[Observable, Callable[[np.ndarray], np.ndarray]]
Model = Union[SdeSystem, ModelSpec, DiffusionProcess]

RICHARDSON_BIAS_RATIO = 0.1


@dataclass(frozen=True)
class EstimatorConfig:
    dt: float = 1e-3
    n_paths: int = 10_000
    seed: int = 0
    scheme: Scheme = Scheme.HEUN_STRATONOVICH
    # directional finite-difference step
    h: float = 1e-3
    richardson: bool = True
    # "crn" finite differences or the "tangent" process
    derivative: str = "crn"
    max_blowup_fraction: float = 1e-3
    workers: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.derivative not in ("crn", "tangent"):
            raise ValueError(f"derivative must be 'crn' or 'tangent', got {self.derivative!r}")
        if not 0 < self.h <= 0.1:
            raise ValueError(f"h must lie in (0, 0.1], got {self.h}")

    def integrator(self, t: float, record_every: Optional[int] = None) -> IntegratorConfig:
        config = IntegratorConfig(
            dt=self.dt,
            t_end=t,
            seed=self.seed,
            n_paths=self.n_paths,
            scheme=self.scheme,
            record_every=record_every,
            max_blowup_fraction=self.max_blowup_fraction,
        )
        if abs(config.n_steps * self.dt - t) > 1e-9 * max(1.0, t):
            logger.warning(f"t = {t} is not a multiple of dt = {self.dt}; using t = {config.n_steps * self.dt}")
        return config

    def replace(self, **changes: Any) -> "EstimatorConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class EstimatorResult:
    value: float
    std_err: float
    n_paths: int
    seed: int
    dt: float
    method: str = "mc"

    @classmethod
    def exact(cls, value: float, config: EstimatorConfig, method: str = "exact") -> "EstimatorResult":
        return cls(float(value), 0.0, 0, config.seed, config.dt, method)

    @classmethod
    def from_samples(cls, samples: np.ndarray, config: EstimatorConfig, method: str = "mc") -> "EstimatorResult":
        samples = np.asarray(samples, dtype=np.float64)
        n = samples.shape[0]
        std_err = float(samples.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
        return cls(float(samples.mean()), std_err, n, config.seed, config.dt, method)

    def scaled(self, factor: float) -> "EstimatorResult":
        return dataclasses.replace(self, value=self.value * factor, std_err=self.std_err * abs(factor))

    def to_json(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "std_err": self.std_err if np.isfinite(self.std_err) else None,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "dt": self.dt,
            "method": self.method,
        }


def as_system(model: Model) -> Any:
    return assemble_sde(model) if isinstance(model, ModelSpec) else model


def evaluate(f: ObservableLike, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return np.array(np.broadcast_to(np.asarray(f(points), dtype=np.float64), points.shape[:-1]))


def _constant_value(f: ObservableLike) -> Optional[float]:
    if isinstance(f, Observable) and f.is_constant():
        return float(f.expr)
    return None


def as_point(x: Any, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dim,):
        raise ValueError(f"x must have shape ({dim},), got {x.shape}")
    return x


def simulate(system: DiffusionProcess, x0: np.ndarray, t: float, config: EstimatorConfig, direction: Optional[np.ndarray] = None) -> PathEnsemble:
    return integrate_paths(system, config.integrator(t), x0, direction=direction, workers=config.workers)


def estimate_Ptf(model: Model, f: ObservableLike, x: Any, t: float, config: EstimatorConfig) -> EstimatorResult:
    """P_tf(x) = E[f(ξ_t) | ξ_0 = x]; exact at t = 0 and for constant f."""
    system = as_system(model)
    x = as_point(x, system.dim)
    constant = _constant_value(f)
    if constant is not None:
        return EstimatorResult.exact(constant, config)
    if t == 0:
        return EstimatorResult.exact(float(evaluate(f, x)), config)
    ensemble = simulate(system, x, t, config)
    return EstimatorResult.from_samples(evaluate(f, ensemble.final()), config)


def estimate_variance(model: Model, f: ObservableLike, x: Any, t: float, config: EstimatorConfig) -> EstimatorResult:
    """P_tf² − (P_tf)², with standard error √((m4 − s⁴)/n)."""
    system = as_system(model)
    x = as_point(x, system.dim)
    if t == 0 or _constant_value(f) is not None:
        return EstimatorResult.exact(0.0, config)
    ensemble = simulate(system, x, t, config)
    return variance_result(evaluate(f, ensemble.final()), config)


def variance_result(values: np.ndarray, config: EstimatorConfig, method: str = "mc") -> EstimatorResult:
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    centered = values - values.mean()
    s2 = float(np.mean(centered**2)) * n / max(n - 1, 1)
    m4 = float(np.mean(centered**4))
    std_err = float(np.sqrt(max(m4 - s2**2, 0.0) / n)) if n > 1 else float("inf")
    return EstimatorResult(s2, std_err, n, config.seed, config.dt, method)


# ----------------------------------------------------------------------
# directional derivatives
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Direction:
    """A curve h ↦ flow(h) of start points through x, with velocity at h = 0."""

    flow: Callable[[float], np.ndarray]
    velocity: np.ndarray
    label: str


def field_direction(V: PolyVectorField, x: np.ndarray, label: str) -> Direction:
    return Direction(flow=lambda s: flow_exp(V, x, s), velocity=V.evaluate_numpy(x), label=label)


def directional_samples(
    system: DiffusionProcess,
    f: ObservableLike,
    x: np.ndarray,
    t: float,
    directions: Sequence[Direction],
    config: EstimatorConfig,
) -> tuple[np.ndarray, list[str]]:
    """Pathwise estimates of d/dh P_tf(flow(h)) at h = 0 per direction; shape (K, P)."""
    if config.derivative == "tangent":
        if not isinstance(f, Observable):
            raise ValueError("the tangent estimator needs an Observable (its gradient is used)")
        velocities = np.stack([d.velocity for d in directions])
        x0 = np.broadcast_to(x, velocities.shape).copy()
        ensemble = simulate(system, x0, t, config, direction=velocities)
        samples = np.stack(
            [
                np.sum(f.gradient(ensemble.final(q)) * ensemble.final_tangent(q), axis=-1)
                for q in range(len(directions))
            ]
        )
        return samples, ["tangent"] * len(directions)

    h = config.h
    offsets = (h, -h, h / 2, -h / 2) if config.richardson else (h, -h)
    starts = np.stack([d.flow(s) for d in directions for s in offsets])
    ensemble = simulate(system, starts, t, config)
    values = np.stack([evaluate(f, ensemble.final(q)) for q in range(starts.shape[0])])
    values = values.reshape(len(directions), len(offsets), -1)
    coarse = (values[:, 0] - values[:, 1]) / (2 * h)
    if not config.richardson:
        return coarse, ["crn"] * len(directions)

    fine = (values[:, 2] - values[:, 3]) / h
    samples = np.empty_like(coarse)
    methods = []
    n = coarse.shape[1]
    for row, direction in enumerate(directions):
        std_err = coarse[row].std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
        bias = abs(float(np.mean(coarse[row] - fine[row]))) * 4.0 / 3.0
        if bias > RICHARDSON_BIAS_RATIO * std_err:
            logger.debug(
                f"{direction.label}: discretisation bias {bias:.3e} vs std err {std_err:.3e}, using Richardson"
            )
            samples[row] = (4.0 * fine[row] - coarse[row]) / 3.0
            methods.append("crn_richardson")
        else:
            samples[row] = coarse[row]
            methods.append("crn")
    return samples, methods


def _field_directions(system: SdeSystem, x: np.ndarray, ks: Sequence[int]) -> list[Direction]:
    Z = system.spec.geometry.Z
    return [field_direction(Z[k], x, f"Z_{k + 1}") for k in ks]


def _exact_derivative(system: SdeSystem, f: ObservableLike, x: np.ndarray, k: int, config: EstimatorConfig) -> float:
    V = system.spec.geometry.Z[k]
    if isinstance(f, Observable):
        return float(f.apply_field(V)(x))
    h = config.h
    return float((evaluate(f, flow_exp(V, x, h)) - evaluate(f, flow_exp(V, x, -h))) / (2 * h))


def estimate_Zk_Ptf(model: Model, f: ObservableLike, x: Any, t: float, k: int, config: EstimatorConfig) -> EstimatorResult:
    """Z_k(P_tf)(x) for a 0-based field index k."""
    system = as_system(model)
    x = as_point(x, system.dim)
    if not 0 <= k < system.spec.geometry.n:
        raise IndexError(f"field index {k} out of range for n = {system.spec.geometry.n}")
    if _constant_value(f) is not None:
        return EstimatorResult.exact(0.0, config)
    if t == 0:
        return EstimatorResult.exact(_exact_derivative(system, f, x, k, config), config)
    samples, methods = directional_samples(system, f, x, t, _field_directions(system, x, [k]), config)
    return EstimatorResult.from_samples(samples[0], config, method=methods[0])


def gamma_result(samples: np.ndarray, config: EstimatorConfig, method: str) -> EstimatorResult:
    """Σ_k (mean of row k)² with a delta-method standard error.

    The variance of the quadratic form is gᵀΣg/n + 2tr(Σ²)/n² with g = 2μ and
    Σ the sample covariance of the rows; the second term keeps the error
    honest when μ ≈ 0.
    """
    samples = np.asarray(samples, dtype=np.float64)
    K, n = samples.shape
    mean = samples.mean(axis=1)
    value = float(np.sum(mean**2))
    if n < 2:
        return EstimatorResult(value, float("inf"), n, config.seed, config.dt, method)
    cov = np.atleast_2d(np.cov(samples, ddof=1))
    grad = 2.0 * mean
    variance = float(grad @ cov @ grad) / n + 2.0 * float(np.sum(cov * cov.T)) / n**2
    return EstimatorResult(value, float(np.sqrt(max(variance, 0.0))), n, config.seed, config.dt, method)


def estimate_gamma(model: Model, f: ObservableLike, x: Any, t: float, config: EstimatorConfig) -> EstimatorResult:
    """Γ(P_tf)(x) = Σ_k |Z_kP_tf(x)|² from one batched simulation."""
    system = as_system(model)
    x = as_point(x, system.dim)
    n_fields = system.spec.geometry.n
    if _constant_value(f) is not None:
        return EstimatorResult.exact(0.0, config)
    if t == 0:
        value = sum(_exact_derivative(system, f, x, k, config) ** 2 for k in range(n_fields))
        return EstimatorResult.exact(value, config)
    directions = _field_directions(system, x, range(n_fields))
    samples, methods = directional_samples(system, f, x, t, directions, config)
    method = "crn_richardson" if "crn_richardson" in methods else methods[0]
    return gamma_result(samples, config, method)
