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
"""Long-run samples standing in for the invariant measure ν.

Each path is run through a burn-in, then recorded every ``thinning`` steps.
Snapshots of one path are correlated, so standard errors are taken over the
per-path averages.
"""

import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from hypocoerce.constants.interfaces import PreconditionError
from hypocoerce.geometry.interfaces import Geometry
from hypocoerce.sde.integrators import integrate_paths
from hypocoerce.semigroup.checks import SIGMA_LEVEL, BoundCheck
from hypocoerce.semigroup.estimators import (
    EstimatorConfig,
    EstimatorResult,
    Model,
    ObservableLike,
    as_point,
    as_system,
    evaluate,
)
from hypocoerce.semigroup.observables import Observable


@dataclass(frozen=True)
class InvariantSample:
    """Thinned post-burn-in states, shape (S, P, N)."""

    states: np.ndarray
    times: np.ndarray
    geometry: Geometry
    config: EstimatorConfig

    @property
    def flat(self) -> np.ndarray:
        return self.states.reshape(-1, self.states.shape[-1])

    def _per_path(self, values: np.ndarray) -> np.ndarray:
        return values.reshape(self.states.shape[:2]).mean(axis=0)

    def mean(self, f: ObservableLike) -> EstimatorResult:
        if isinstance(f, Observable) and f.is_constant():
            return EstimatorResult.exact(float(f.expr), self.config)
        per_path = self._per_path(evaluate(f, self.flat))
        return EstimatorResult.from_samples(per_path, self.config, method="invariant")

    def variance(self, f: ObservableLike) -> EstimatorResult:
        """ν(f − νf)²."""
        if isinstance(f, Observable) and f.is_constant():
            return EstimatorResult.exact(0.0, self.config)
        values = evaluate(f, self.flat)
        per_path = self._per_path((values - values.mean()) ** 2)
        return EstimatorResult.from_samples(per_path, self.config, method="invariant")


def empirical_invariant_measure(
    model: Model,
    x0: Any,
    t_burn: float,
    t_sample: float,
    thinning: int,
    config: EstimatorConfig,
) -> InvariantSample:
    """Run to t_burn + t_sample and keep every ``thinning``-th state after t_burn."""
    if thinning < 1:
        raise ValueError(f"thinning must be at least 1, got {thinning}")
    if t_burn < 0 or t_sample <= 0:
        raise ValueError("t_burn must be non-negative and t_sample positive")
    system = as_system(model)
    x0 = as_point(x0, system.dim)
    integrator = config.integrator(t_burn + t_sample, record_every=thinning)
    ensemble = integrate_paths(system, integrator, x0, workers=config.workers)
    burn_step = int(round(t_burn / config.dt))
    keep = [index for index, step in enumerate(integrator.snapshot_steps()) if step >= burn_step]
    if not keep:
        raise PreconditionError("no snapshot falls after the burn-in")
    states = np.stack([ensemble.at(index) for index in keep])
    return InvariantSample(states, ensemble.times[keep], system.spec.geometry, config)


def invariant_poincare_check(sample: InvariantSample, f: Observable, kappa: float) -> BoundCheck:
    """ν(f − νf)² ≤ (2/κ) νΓ(f)."""
    if kappa <= 0:
        raise PreconditionError(f"the invariant Poincare inequality needs kappa > 0, got {kappa}")
    lhs = sample.variance(f)
    rhs = sample.mean(f.gamma(sample.geometry)).scaled(2.0 / kappa)
    return BoundCheck.compare("nu_poincare", float(sample.times[-1]), lhs, rhs)


@dataclass(frozen=True)
class SelfConsistency:
    results: tuple[EstimatorResult, ...]
    difference: float
    combined_err: float

    @property
    def consistent(self) -> bool:
        return abs(self.difference) <= SIGMA_LEVEL * self.combined_err

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": "nu_self_consistency",
            "results": [r.to_json() for r in self.results],
            "difference": self.difference,
            "combined_err": self.combined_err,
            "consistent": self.consistent,
        }


def invariant_self_consistency(
    model: Model,
    f: ObservableLike,
    x0: Any,
    t_burn: float,
    t_sample: float,
    thinning: int,
    config: EstimatorConfig,
    seeds: Optional[Sequence[int]] = None,
) -> SelfConsistency:
    """νf from two independent seeds must agree within 3 combined standard errors."""
    seeds = tuple(seeds) if seeds is not None else (config.seed, config.seed + 1)
    if len(seeds) != 2 or seeds[0] == seeds[1]:
        raise ValueError("self-consistency needs two distinct seeds")
    system = as_system(model)
    results = tuple(
        empirical_invariant_measure(system, x0, t_burn, t_sample, thinning, config.replace(seed=seed)).mean(f)
        for seed in seeds
    )
    return SelfConsistency(
        results=results,
        difference=results[0].value - results[1].value,
        combined_err=math.hypot(results[0].std_err, results[1].std_err),
    )
