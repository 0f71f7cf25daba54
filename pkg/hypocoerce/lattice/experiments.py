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
"""Lattice experiments: finite speed of propagation, volume limits, ergodicity.

Sup-norms over configurations are replaced by maxima over a declared probe
set of configurations; the probes are part of every result.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats

from hypocoerce.geometry.gauge import gauge_for
from hypocoerce.lattice.constants import LatticeConstants, lattice_constants
from hypocoerce.lattice.dynamics import (
    CylinderFunction,
    LatticeSystem,
    estimate_gamma_k,
    sup_over_probes,
)
from hypocoerce.lattice.model import LatticeConfigError, LatticeModel, Site, distance_to_set
from hypocoerce.sde.integrators import integrate_paths
from hypocoerce.semigroup.checks import BoundCheck
from hypocoerce.semigroup.estimators import EstimatorConfig, EstimatorResult, as_point, estimate_Ptf

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95


@dataclass(frozen=True)
class DecayFit:
    """log y = intercept − rate·x, with a one-sided lower confidence bound on the rate."""

    rate: float
    stderr: float
    intercept: float
    n_points: int
    rate_lower: float

    @property
    def significant(self) -> bool:
        return self.rate_lower > 0

    @classmethod
    def fit(cls, x: Sequence[float], y: Sequence[float]) -> Optional["DecayFit"]:
        """Fit the positive entries of ``y``; None when fewer than three remain."""
        points = [(float(a), float(b)) for a, b in zip(x, y) if b > 0 and math.isfinite(b)]
        if len(points) < 3 or len({a for a, _ in points}) < 2:
            return None
        xs, ys = zip(*points)
        result = stats.linregress(xs, np.log(ys))
        stderr = float(result.stderr) if math.isfinite(result.stderr) else 0.0
        quantile = float(stats.t.ppf(CONFIDENCE, len(points) - 2))
        rate = -float(result.slope)
        return cls(rate, stderr, float(result.intercept), len(points), rate - quantile * stderr)

    def to_json(self) -> dict[str, Any]:
        return {
            "rate": self.rate,
            "stderr": self.stderr,
            "intercept": self.intercept,
            "n_points": self.n_points,
            "rate_lower_95": self.rate_lower,
            "significant": self.significant,
        }


def _range_steps(model: LatticeModel, distance: int) -> int:
    return distance // model.R if model.R > 0 else distance


def _probe_list(system: LatticeSystem, probes: Optional[Sequence[Any]], fallback: Any) -> list[np.ndarray]:
    chosen = list(probes) if probes is not None else [fallback]
    if not chosen:
        raise LatticeConfigError("the probe set is empty")
    return [as_point(p, system.dim) for p in chosen]


# ----------------------------------------------------------------------
# finite speed of propagation
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SpeedRow:
    site: Site
    distance: int
    n_k: int
    estimate: EstimatorResult
    probe: int

    def csv_row(self) -> list[Any]:
        return [
            " ".join(map(str, self.site)),
            self.distance,
            self.n_k,
            self.estimate.value,
            self.estimate.std_err,
            self.probe,
        ]


SPEED_CSV_HEADER = ["site", "distance", "n_k", "estimate", "std_err", "probe"]


@dataclass(frozen=True)
class SpeedProfile:
    t: float
    rows: tuple[SpeedRow, ...]
    envelope: Optional[DecayFit]
    log_C: Optional[float]
    spearman: Optional[float]
    spearman_pvalue: Optional[float]

    @property
    def decays(self) -> bool:
        return self.envelope is not None and self.envelope.significant

    def to_json(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "envelope": self.envelope.to_json() if self.envelope else None,
            "log_C": self.log_C,
            "spearman": self.spearman,
            "spearman_pvalue": self.spearman_pvalue,
            "decays": self.decays,
            "rows": len(self.rows),
        }


def _shape_fit(rows: Sequence[SpeedRow], t: float) -> Optional[float]:
    """log C from log Γ_k ≈ N_k(log C − log N_k + 2 + log t) + const."""
    points = [(r.n_k, r.estimate.value) for r in rows if r.n_k >= 1 and r.estimate.value > 0]
    if len(points) < 3 or len({n for n, _ in points}) < 2:
        return None
    xs = [float(n) for n, _ in points]
    ys = [math.log(v) + n * math.log(n) - n * (2.0 + math.log(t)) for n, v in points]
    return float(stats.linregress(xs, ys).slope)


def finite_speed_profile(
    model: LatticeModel,
    f: CylinderFunction,
    t: float,
    probes: Optional[Sequence[Any]],
    config: EstimatorConfig,
    max_distance: Optional[int] = None,
    spearman_max_n: int = 8,
) -> SpeedProfile:
    """max over probes of Γ_k(P_t^Λf) for every box site k outside Λ(f)."""
    if t <= 0:
        raise ValueError("the propagation profile needs t > 0")
    system = LatticeSystem(model)
    probe_points = _probe_list(system, probes, model.zeros())
    rows = []
    for site in model.sites:
        if site in f.support:
            continue
        distance = distance_to_set(site, f.support)
        if max_distance is not None and distance > max_distance:
            continue
        estimates = [estimate_gamma_k(system, f, omega, t, site, config) for omega in probe_points]
        index, best = sup_over_probes(estimates)
        rows.append(SpeedRow(site, distance, _range_steps(model, distance), best, index))
    rows.sort(key=lambda r: (r.distance, r.site))

    envelope = DecayFit.fit([r.n_k for r in rows], [r.estimate.value for r in rows])
    near = [r for r in rows if r.n_k <= spearman_max_n]
    rho: Optional[float] = None
    pvalue: Optional[float] = None
    if len(near) >= 3 and len({r.estimate.value for r in near}) > 1:
        result = stats.spearmanr([r.n_k for r in near], [r.estimate.value for r in near])
        rho, pvalue = float(result.statistic), float(result.pvalue)
    return SpeedProfile(t, tuple(rows), envelope, _shape_fit(rows, t), rho, pvalue)


# ----------------------------------------------------------------------
# volume limit
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class CauchyPoint:
    n_bar: int
    active_size: int
    discrepancy: EstimatorResult
    probe: int

    def csv_row(self) -> list[Any]:
        return [self.n_bar, self.active_size, self.discrepancy.value, self.discrepancy.std_err, self.probe]


CAUCHY_CSV_HEADER = ["n_bar", "active_size", "discrepancy", "std_err", "probe"]


def exit_distance(model: LatticeModel, inner: Sequence[Site], support: Sequence[Site]) -> int:
    """ℓ¹ distance from Λ(f) to the nearest site outside ``inner``."""
    inner_set = set(inner)
    outside = [s for s in model.sites if s not in inner_set]
    candidates = [min(model.distance_to_boundary(s) for s in support)]
    if outside:
        candidates.append(min(distance_to_set(s, support) for s in outside))
    return min(candidates)


def volume_cauchy(
    small: LatticeModel,
    large: LatticeModel,
    f: CylinderFunction,
    t: float,
    probes: Optional[Sequence[Any]],
    config: EstimatorConfig,
) -> CauchyPoint:
    """max over probes of |P_t^{Λ₂}f − P_t^{Λ₁}f| under common noise."""
    if small.box != large.box or small.site_geometry.name != large.site_geometry.name:
        raise LatticeConfigError("volume comparison needs a shared box and site geometry")
    if not set(small.active) <= set(large.active):
        raise LatticeConfigError("the smaller active set must be contained in the larger one")
    if not set(f.support) <= set(small.active):
        raise LatticeConfigError("the cylinder support must lie in the smaller active set")
    n_bar = _range_steps(large, exit_distance(large, small.active, f.support))
    system_small, system_large = LatticeSystem(small), LatticeSystem(large)
    probe_points = _probe_list(system_large, probes, large.zeros())
    results = []
    for omega in probe_points:
        if small.active == large.active or t == 0:
            results.append(EstimatorResult.exact(0.0, config))
            continue
        integrator = config.integrator(t)
        ensembles = [
            integrate_paths(system, integrator, omega, workers=config.workers) for system in (system_large, system_small)
        ]
        # paths dropped by either run are dropped from the pair
        alive = ensembles[0].alive & ensembles[1].alive
        values = [f(e.snapshots[-1, 0][alive]) for e in ensembles]
        estimate = EstimatorResult.from_samples(values[0] - values[1], config, method="crn")
        results.append(
            EstimatorResult(abs(estimate.value), estimate.std_err, estimate.n_paths, estimate.seed, estimate.dt, "crn")
        )
    index, best = sup_over_probes(results)
    return CauchyPoint(n_bar, len(small.active), best, index)


@dataclass(frozen=True)
class CauchySeries:
    t: float
    points: tuple[CauchyPoint, ...]
    fit: Optional[DecayFit]

    def to_json(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "points": [
                {"n_bar": p.n_bar, "active_size": p.active_size, **p.discrepancy.to_json()} for p in self.points
            ],
            "fit": self.fit.to_json() if self.fit else None,
        }


def volume_cauchy_series(
    model: LatticeModel,
    f: CylinderFunction,
    radii: Sequence[int],
    t: float,
    probes: Optional[Sequence[Any]],
    config: EstimatorConfig,
) -> CauchySeries:
    """Λ₁ = ball(Λ(f), r) ∩ Λ for growing r against Λ₂ = Λ; log-linear fit in N̄."""
    points = []
    for radius in sorted(set(int(r) for r in radii)):
        small = model.with_active(model.ball(f.support, radius))
        points.append(volume_cauchy(small, model, f, t, probes, config))
    fit = DecayFit.fit([p.n_bar for p in points], [p.discrepancy.value for p in points])
    return CauchySeries(t, tuple(points), fit)


# ----------------------------------------------------------------------
# ergodicity
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class ErgodicityResult:
    times: tuple[float, ...]
    differences: tuple[EstimatorResult, ...]
    fit: Optional[DecayFit]
    status: str
    theory: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "times": list(self.times),
            "differences": [d.to_json() for d in self.differences],
            "fit": self.fit.to_json() if self.fit else None,
            "status": self.status,
            "theory": self.theory,
        }

    def csv_rows(self) -> list[list[Any]]:
        return [[t, d.value, d.std_err] for t, d in zip(self.times, self.differences)]


ERGODICITY_CSV_HEADER = ["t", "difference", "std_err"]


def ergodicity_decay(
    model: LatticeModel,
    f: CylinderFunction,
    omega: Any,
    omega_tilde: Any,
    t_grid: Sequence[float],
    config: EstimatorConfig,
) -> ErgodicityResult:
    """|P_tf(ω) − P_tf(ω̃)| on a time grid from one coupled simulation, with a log-linear rate fit.

    Only points where the difference exceeds three standard errors enter the fit.
    """
    system = LatticeSystem(model)
    omega = as_point(omega, system.dim)
    omega_tilde = as_point(omega_tilde, system.dim)
    times = sorted(float(t) for t in t_grid)
    if not times:
        raise ValueError("empty time grid")
    constants = lattice_constants(model)
    theory = {"varsigma_half": float(constants.varsigma) / 2, "kappa_bar": float(constants.kappa_bar)}
    if np.array_equal(omega, omega_tilde):
        zeros = tuple(EstimatorResult.exact(0.0, config) for _ in times)
        return ErgodicityResult(tuple(times), zeros, None, "identical", theory)

    steps = [int(round(t / config.dt)) for t in times]
    stride = 0
    for step in steps:
        stride = math.gcd(stride, step)
    integrator = config.integrator(times[-1], record_every=max(stride, 1))
    ensemble = integrate_paths(system, integrator, np.stack([omega, omega_tilde]), workers=config.workers)
    recorded = {step: index for index, step in enumerate(integrator.snapshot_steps())}
    differences = []
    for step in steps:
        if step == 0:
            differences.append(EstimatorResult.exact(float(f(omega) - f(omega_tilde)), config))
            continue
        index = recorded[step]
        samples = f(ensemble.at(index, q=0)) - f(ensemble.at(index, q=1))
        estimate = EstimatorResult.from_samples(samples, config, method="crn")
        differences.append(
            EstimatorResult(abs(estimate.value), estimate.std_err, estimate.n_paths, estimate.seed, estimate.dt, "crn")
        )

    above_noise = [(t, d.value) for t, d in zip(times, differences) if d.value > 3 * d.std_err]
    fit = DecayFit.fit([t for t, _ in above_noise], [v for _, v in above_noise])
    if fit is None:
        status = "converged before grid end"
    else:
        status = "decaying" if fit.significant else "not decaying"
    return ErgodicityResult(tuple(times), tuple(differences), fit, status, theory)


# ----------------------------------------------------------------------
# configuration classes
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class OmegaMembership:
    member: bool
    partial_sum: float
    zeta: float
    bound: float

    def to_json(self) -> dict[str, Any]:
        return {"member": self.member, "partial_sum": self.partial_sum, "zeta": self.zeta, "K": self.bound}


def omega_membership(model: LatticeModel, omega: Any, zeta: float, K: float) -> OmegaMembership:
    """Σ_{k∈B} (1+|k|)^{−ζ} d(ω_k) < 𝒦 with d the site gauge; needs ζ > d."""
    if zeta <= model.d:
        raise LatticeConfigError(f"zeta must exceed the lattice dimension {model.d}, got {zeta}")
    if K <= 0:
        raise LatticeConfigError(f"K must be positive, got {K}")
    sites = model.site_view(as_point(omega, model.dim))
    distances = gauge_for(model.site_geometry).value(sites)
    norms = np.array([sum(abs(c) for c in s) for s in model.sites], dtype=np.float64)
    total = float(np.sum((1.0 + norms) ** (-zeta) * distances))
    return OmegaMembership(total < K, total, float(zeta), float(K))


# ----------------------------------------------------------------------
# gradient bounds on the lattice
# ----------------------------------------------------------------------
def check_gamma_lambda_decay(
    model: LatticeModel,
    f: CylinderFunction,
    omega: Any,
    t: float,
    config: EstimatorConfig,
    sites: Optional[Sequence[Sequence[int]]] = None,
    constants: Optional[LatticeConstants] = None,
) -> list[BoundCheck]:
    """Γ_k(P_t^Λf)(ω) ≤ e^{−ςt} P_t^Λ(Γ_Λf)(ω) for each site k."""
    system = LatticeSystem(model)
    constants = constants or lattice_constants(model)
    omega = as_point(omega, system.dim)
    rhs = estimate_Ptf(system, f.gamma_total, omega, t, config).scaled(math.exp(-float(constants.varsigma) * t))
    checked = [tuple(s) for s in sites] if sites is not None else list(f.support)
    return [
        BoundCheck.compare(f"gamma_lambda{site}", t, estimate_gamma_k(system, f, omega, t, site, config), rhs)
        for site in checked
    ]


def _trapezoid_weights(times: Sequence[float]) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    weights = np.zeros_like(times)
    gaps = np.diff(times)
    weights[:-1] += gaps / 2
    weights[1:] += gaps / 2
    return weights


def check_local_recursion(
    model: LatticeModel,
    f: CylinderFunction,
    omega: Any,
    site: Sequence[int],
    t_grid: Sequence[float],
    probes: Optional[Sequence[Any]],
    config: EstimatorConfig,
    constants: Optional[LatticeConstants] = None,
) -> BoundCheck:
    """Γ_k(P_Tf) ≤ e^{−κ̄T}P_TΓ_k(f) + Σ_{j≠k} M_{k,j} ∫₀ᵀ e^{−κ̄(T−s)} ‖Γ_j(P_sf)‖ ds.

    The sup-norm is the maximum over ``probes`` and the integral is the
    trapezoid rule on ``t_grid``, which must start at 0.
    """
    times = sorted(float(t) for t in t_grid)
    if len(times) < 2 or times[0] != 0.0:
        raise ValueError("the recursion grid must start at 0 and have at least two points")
    k = tuple(site)
    system = LatticeSystem(model)
    constants = constants or lattice_constants(model)
    omega = as_point(omega, system.dim)
    probe_points = _probe_list(system, probes, omega)
    T = times[-1]
    kappa_bar = float(constants.kappa_bar)

    lhs = estimate_gamma_k(system, f, omega, T, k, config)
    head = estimate_Ptf(system, f.gamma_k(k), omega, T, config).scaled(math.exp(-kappa_bar * T))
    value, variance = head.value, head.std_err**2
    weights = _trapezoid_weights(times)
    for (row, j), M in constants.M.items():
        if row != k or j == k:
            continue
        for s, w in zip(times, weights):
            if w == 0:
                continue
            estimates = [estimate_gamma_k(system, f, probe, s, j, config) for probe in probe_points]
            _, best = sup_over_probes(estimates)
            factor = float(M) * w * math.exp(-kappa_bar * (T - s))
            value += factor * best.value
            variance += (factor * best.std_err) ** 2
    rhs = EstimatorResult(value, math.sqrt(variance), config.n_paths, config.seed, config.dt, "recursion")
    return BoundCheck.compare(f"recursion{k}", T, lhs, rhs)
