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
"""Statistical checks of the decay inequalities.

Every check compares two estimates lhs ≤ rhs. A bound is reported as
violated only on a 3σ exceedance, where σ combines both standard errors.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np
from scipy import stats

from hypocoerce.constants.interfaces import MissingBoundError, PreconditionError
from hypocoerce.constants.kappa import kappa as kappa_report
from hypocoerce.constants.kappa import kappa_q
from hypocoerce.geometry.gauge import CutoffRho, cutoff_rho, gauge_for
from hypocoerce.sde.integrators import integrate_paths
from hypocoerce.semigroup.estimators import (
    EstimatorConfig,
    EstimatorResult,
    Model,
    ObservableLike,
    as_point,
    as_system,
    estimate_gamma,
    estimate_Ptf,
    evaluate,
    simulate,
    variance_result,
)
from hypocoerce.semigroup.observables import Observable

logger = logging.getLogger(__name__)

SIGMA_LEVEL = 3.0
# floating-point allowance for deterministic (zero-variance) comparisons
ROUNDING_RTOL = 1e-9

HOLDS = "holds"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"


def verdict(lhs: float, rhs: float, sigma: float, rtol: float = ROUNDING_RTOL) -> str:
    """Classify lhs ≤ rhs given the combined standard error σ.

    ``rtol`` is a relative allowance on top of 3σ for deterministic error
    such as time discretisation.

    >>> verdict(1.0, 1.0, 0.0)
    'holds'
    >>> verdict(2.0, 1.0, 0.1)
    'violated'
    >>> verdict(0.01, 0.02, 1.0)
    'inconclusive'
    >>> verdict(1.0005, 1.0, 0.0, rtol=1e-3)
    'holds'
    """
    tolerance = rtol * max(abs(lhs), abs(rhs))
    if math.isfinite(sigma) and lhs - rhs > SIGMA_LEVEL * sigma + tolerance:
        return VIOLATED
    scale = max(abs(lhs), abs(rhs))
    if not math.isfinite(sigma) or SIGMA_LEVEL * sigma > scale > 0:
        return INCONCLUSIVE
    return HOLDS


def discretisation_rtol(*results: EstimatorResult) -> float:
    """One weak-order step, dt, for every simulated side; exact sides add nothing."""
    simulated = [r.dt for r in results if r.method != "exact"]
    return max([ROUNDING_RTOL, *simulated])


@dataclass(frozen=True)
class BoundCheck:
    kind: str
    t: float
    lhs: EstimatorResult
    rhs: EstimatorResult
    margin: float
    verdict: str

    @classmethod
    def compare(cls, kind: str, t: float, lhs: EstimatorResult, rhs: EstimatorResult) -> "BoundCheck":
        sigma = math.hypot(lhs.std_err, rhs.std_err)
        gap = rhs.value - lhs.value
        if sigma > 0:
            margin = gap / sigma
        else:
            margin = 0.0 if gap == 0 else math.copysign(math.inf, gap)
        return cls(kind, t, lhs, rhs, margin, verdict(lhs.value, rhs.value, sigma, discretisation_rtol(lhs, rhs)))

    @property
    def violated(self) -> bool:
        return self.verdict == VIOLATED

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "t": self.t,
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "margin": self.margin if math.isfinite(self.margin) else None,
            "verdict": self.verdict,
        }

    def csv_row(self) -> list[Any]:
        return [
            self.t,
            self.lhs.value,
            self.lhs.std_err,
            self.rhs.value,
            self.rhs.std_err,
            self.margin,
            self.verdict,
        ]


CSV_HEADER = ["t", "lhs", "lhs_err", "rhs", "rhs_err", "margin", "verdict"]


def _kappa_value(model: Model, kappa: Optional[float]) -> float:
    if kappa is not None:
        return float(kappa)
    return float(kappa_report(as_system(model).spec).kappa)


def check_gradient_bound(
    model: Model,
    f: Observable,
    x: Any,
    t: float,
    config: EstimatorConfig,
    kappa: Optional[float] = None,
) -> BoundCheck:
    """Γ(P_tf)(x) ≤ e^{−κt} P_tΓ(f)(x); κ defaults to the standard constant and may be ≤ 0."""
    system = as_system(model)
    rate = _kappa_value(system, kappa)
    lhs = estimate_gamma(system, f, x, t, config)
    rhs = estimate_Ptf(system, f.gamma(system.spec.geometry), x, t, config).scaled(math.exp(-rate * t))
    return BoundCheck.compare("grad", t, lhs, rhs)


def _power_result(result: EstimatorResult, power: float) -> EstimatorResult:
    value = max(result.value, 0.0) ** power
    slope = power * result.value ** (power - 1) if result.value > 0 else 0.0
    return EstimatorResult(value, abs(slope) * result.std_err, result.n_paths, result.seed, result.dt, result.method)


def check_lq_bound(
    model: Model,
    f: Observable,
    x: Any,
    t: float,
    q: float,
    config: EstimatorConfig,
    kappa: Optional[float] = None,
) -> BoundCheck:
    """Γ(P_tf)^{q/2} ≤ e^{−κ't} P_t(Γ(f)^{q/2}), proved for G = 0 and α = 0."""
    system = as_system(model)
    rate = float(kappa) if kappa is not None else float(kappa_q(system.spec, q).kappa_q)
    power = q / 2.0
    lhs = _power_result(estimate_gamma(system, f, x, t, config), power)
    gamma = f.gamma(system.spec.geometry)

    def gamma_power(points: np.ndarray) -> np.ndarray:
        return np.maximum(gamma(points), 0.0) ** power

    rhs = estimate_Ptf(system, gamma_power, x, t, config).scaled(math.exp(-rate * t))
    return BoundCheck.compare(f"lq{q:g}", t, lhs, rhs)


def check_poincare(
    model: Model,
    f: Observable,
    x: Any,
    t: float,
    config: EstimatorConfig,
    kappa: Optional[float] = None,
) -> BoundCheck:
    """P_tf² − (P_tf)² ≤ (2/κ)(1 − e^{−κt}) P_tΓ(f); needs κ > 0."""
    system = as_system(model)
    rate = _kappa_value(system, kappa)
    if rate <= 0:
        raise PreconditionError(f"the Poincare inequality needs kappa > 0, got {rate}")
    gamma = f.gamma(system.spec.geometry)
    factor = (2.0 / rate) * (1.0 - math.exp(-rate * t))
    if t == 0 or f.is_constant():
        lhs = EstimatorResult.exact(0.0, config)
        rhs = estimate_Ptf(system, gamma, x, t, config).scaled(factor)
        return BoundCheck.compare("poincare", t, lhs, rhs)
    ensemble = simulate(system, as_point(x, system.dim), t, config)
    states = ensemble.final()
    lhs = variance_result(evaluate(f, states), config)
    rhs = EstimatorResult.from_samples(evaluate(gamma, states), config).scaled(factor)
    return BoundCheck.compare("poincare", t, lhs, rhs)


def check_exp_moment(
    samples: np.ndarray,
    f: Observable,
    delta: float,
    kappa: float,
    geometry: Any,
    config: Optional[EstimatorConfig] = None,
) -> BoundCheck:
    """log E[e^{δ(f − Ef)}] ≤ δ²‖Γ(f)‖∞/κ on long-run samples.

    The multiplicative constant of the bound is a nuisance ≥ 1, so only the
    exponent is compared; the centred form makes the constant-f case exact.
    """
    config = config or EstimatorConfig()
    if kappa <= 0:
        raise PreconditionError(f"the exponential moment bound needs kappa > 0, got {kappa}")
    gamma_bound = f.gamma(geometry).sup_bound
    if gamma_bound is None:
        raise MissingBoundError(f"no certified bound on Gamma({f.text}); the moment bound needs one")
    exponent = delta**2 * gamma_bound / kappa
    if exponent > 1:
        raise PreconditionError(
            f"delta^2 ||Gamma(f)|| / kappa = {exponent:.4g} > 1; choose a smaller delta"
        )
    rhs = EstimatorResult.exact(exponent, config)
    if f.is_constant():
        return BoundCheck.compare("expmoment", 0.0, EstimatorResult.exact(0.0, config), rhs)
    values = evaluate(f, np.asarray(samples, dtype=np.float64))
    weights = np.exp(delta * (values - values.mean()))
    n = weights.shape[0]
    moment = float(weights.mean())
    std_err = float(weights.std(ddof=1) / (np.sqrt(n) * moment)) if n > 1 else float("inf")
    lhs = EstimatorResult(float(np.log(moment)), std_err, n, config.seed, config.dt)
    return BoundCheck.compare("expmoment", 0.0, lhs, rhs)


@dataclass(frozen=True)
class LyapunovCheck:
    """P_tρ(x) along a time grid and the trend test on its second half."""

    times: tuple[float, ...]
    results: tuple[EstimatorResult, ...]
    slope: float
    slope_stderr: float
    verdict: str

    @property
    def bounded(self) -> bool:
        return self.verdict == "bounded"

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": "lyapunov",
            "times": list(self.times),
            "values": [r.to_json() for r in self.results],
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "verdict": self.verdict,
        }


def lyapunov_function(model: Model, cutoff: Optional[CutoffRho] = None) -> Callable[[np.ndarray], np.ndarray]:
    """ρ = g(N) for the geometry's homogeneous gauge (Euclidean norm on abelian)."""
    geometry = as_system(model).spec.geometry
    gauge = gauge_for(geometry)
    cutoff = cutoff or CutoffRho()

    def rho(points: np.ndarray) -> np.ndarray:
        return cutoff_rho(cutoff, gauge, points)

    return rho


def check_lyapunov(
    model: Model,
    rho: Optional[ObservableLike],
    x: Any,
    t_grid: Sequence[float],
    config: EstimatorConfig,
) -> LyapunovCheck:
    """Estimate P_tρ(x) on ``t_grid`` from one simulation and test for growth.

    The grid's second half (after the knee at its midpoint) is regressed on t;
    the trajectory is bounded unless the slope exceeds 3 standard errors.
    """
    system = as_system(model)
    rho = rho if rho is not None else lyapunov_function(system)
    times = sorted(float(t) for t in t_grid)
    if len(times) < 5:
        raise PreconditionError("the Lyapunov trend test needs at least five grid times")
    steps = [int(round(t / config.dt)) for t in times]
    stride = 0
    for step in steps:
        stride = math.gcd(stride, step)
    x = as_point(x, system.dim)
    integrator = config.integrator(times[-1], record_every=max(stride, 1))
    ensemble = integrate_paths(system, integrator, x, workers=config.workers)
    recorded = {step: index for index, step in enumerate(integrator.snapshot_steps())}
    results = []
    for t, step in zip(times, steps):
        if step == 0:
            results.append(EstimatorResult.exact(float(evaluate(rho, x)), config))
        else:
            results.append(EstimatorResult.from_samples(evaluate(rho, ensemble.at(recorded[step])), config))

    tail = len(times) // 2
    fit = stats.linregress(times[tail:], [r.value for r in results[tail:]])
    stderr = float(fit.stderr) if np.isfinite(fit.stderr) else 0.0
    slope = float(fit.slope)
    outcome = "bounded" if slope <= SIGMA_LEVEL * stderr else "growing"
    if outcome == "growing":
        logger.warning(f"P_t rho keeps growing: slope {slope:.4g} +- {stderr:.2g}")
    return LyapunovCheck(tuple(times), tuple(results), slope, stderr, outcome)
