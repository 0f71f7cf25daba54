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
"""Config-driven experiment runs.

``resolve_config`` turns packaged defaults, an optional user file and Hydra
overrides into a validated ``MasterConfig``; ``run`` executes it and writes the
artifacts of one run directory.
"""

import datetime
import itertools
import json
import logging
import numbers
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence, Union, cast

import numpy as np
from omegaconf import DictConfig, OmegaConf

from hypocoerce.constants.drifts import ALPHA_PRESETS, alpha_preset, custom_drift
from hypocoerce.constants.interfaces import ConditionGError, MissingBoundError, ModelSpec, PreconditionError
from hypocoerce.constants.kappa import kappa, kappa_g_zero, kappa_optimal, kappa_pointwise, kappa_q
from hypocoerce.experiments.interfaces import (
    EXIT_BLOWUP,
    EXIT_OK,
    EXIT_SCHEMA,
    EXIT_VIOLATED,
    KINDS,
    LATTICE_KINDS,
    MasterConfig,
    RunManifest,
)
from hypocoerce.experiments.outputs import (
    MANIFEST_FILE,
    METRICS_FILE,
    REPORT_FILE,
    config_hash,
    write_csv,
    write_manifest,
    write_report,
)
from hypocoerce.geometry.catalog import CATALOG, get_geometry
from hypocoerce.geometry.gauge import GaugeDomainError
from hypocoerce.geometry.interfaces import Geometry, GeometryValidationError
from hypocoerce.lattice.constants import lattice_constants
from hypocoerce.lattice.dynamics import CylinderFunction
from hypocoerce.lattice.experiments import (
    CAUCHY_CSV_HEADER,
    ERGODICITY_CSV_HEADER,
    SPEED_CSV_HEADER,
    check_gamma_lambda_decay,
    check_local_recursion,
    ergodicity_decay,
    finite_speed_profile,
    omega_membership,
    volume_cauchy_series,
)
from hypocoerce.lattice.model import CouplingSpec, LatticeConfigError, LatticeModel, build_lattice, centred_box
from hypocoerce.package_info import __version__
from hypocoerce.polyfield.poly import DimensionMismatchError, PolyDegreeError
from hypocoerce.sde.integrators import NumericalBlowupError, Scheme, expectation, integrate_paths
from hypocoerce.sde.system import assemble_sde
from hypocoerce.semigroup.checks import (
    CSV_HEADER,
    BoundCheck,
    check_exp_moment,
    check_gradient_bound,
    check_lq_bound,
    check_lyapunov,
    check_poincare,
)
from hypocoerce.semigroup.estimators import EstimatorConfig, EstimatorResult, as_point
from hypocoerce.semigroup.invariant import (
    empirical_invariant_measure,
    invariant_poincare_check,
    invariant_self_consistency,
)
from hypocoerce.semigroup.observables import Observable, ObservableError
from hypocoerce.utils.config import (
    ConfigSchemaError,
    OverridesError,
    load_config,
    merge_onto_schema,
    parse_hydra_overrides,
    to_plain,
)
from hypocoerce.utils.logger import Logger, get_next_experiment_dir
from hypocoerce.utils.timer import Timer

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

# user-input failures; all of them exit with EXIT_SCHEMA
INPUT_ERRORS: tuple[type[Exception], ...] = (
    ConfigSchemaError,
    OverridesError,
    ObservableError,
    PreconditionError,
    ConditionGError,
    MissingBoundError,
    LatticeConfigError,
    GeometryValidationError,
    GaugeDomainError,
    PolyDegreeError,
    DimensionMismatchError,
)


def exit_code_for(error: BaseException) -> Optional[int]:
    """Exit code of a failed run, or None for errors that are bugs."""
    if isinstance(error, NumericalBlowupError):
        return EXIT_BLOWUP
    if isinstance(error, INPUT_ERRORS):
        return EXIT_SCHEMA
    return None


# ----------------------------------------------------------------------
# config resolution
# ----------------------------------------------------------------------
def schema_for(kind: str) -> DictConfig:
    if kind not in KINDS:
        raise ConfigSchemaError(f"unknown experiment kind {kind!r}; choose one of {', '.join(KINDS)}")
    return load_config(CONFIG_DIR / f"{kind}.yaml")


def resolve_config(
    kind: Optional[str],
    config_path: Optional[Union[str, Path]] = None,
    overrides: Sequence[str] = (),
    user: Optional[dict[str, Any]] = None,
) -> MasterConfig:
    """Packaged defaults for ``kind`` ← user file ← ``user`` mapping ← Hydra overrides."""
    layers: list[Any] = []
    if config_path is not None:
        layers.append(load_config(config_path))
    if user:
        layers.append(OmegaConf.create(user))
    declared = {str(layer.get("kind")) for layer in layers if layer.get("kind") is not None}
    if kind is None:
        if len(declared) != 1:
            raise ConfigSchemaError("the config must name exactly one experiment kind")
        kind = declared.pop()
    elif declared - {kind}:
        raise ConfigSchemaError(f"config declares kind {sorted(declared)} but {kind!r} was requested")

    cfg = schema_for(kind)
    for layer in layers:
        cfg = merge_onto_schema(cfg, layer)
    if overrides:
        cfg = parse_hydra_overrides(cfg, list(overrides))
    resolved = cast(MasterConfig, to_plain(cfg))
    validate_config(resolved)
    return resolved


def _is_number(value: Any) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _is_int(value: Any) -> bool:
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def validate_config(cfg: MasterConfig) -> None:
    """Range and type checks; all problems are reported in one ConfigSchemaError."""
    problems: list[str] = []

    def require(condition: bool, message: str) -> None:
        if not condition:
            problems.append(message)

    require(cfg["kind"] in KINDS, f"kind: unknown experiment kind {cfg['kind']!r}")

    model = cfg["model"]
    if model["file"] is None:
        require(model["geometry"] in CATALOG, f"model.geometry: {model['geometry']!r} is not a catalog geometry")
    require(model["dim"] is None or (_is_int(model["dim"]) and model["dim"] >= 1), "model.dim: positive integer or null")
    require(_is_number(model["beta"]) or isinstance(model["beta"], str), "model.beta: number expected")
    require(
        model["G"] is None or (isinstance(model["G"], list) and all(isinstance(r, list) for r in model["G"])),
        "model.G: matrix (list of rows) or null",
    )
    alpha = model["alpha"]
    require(
        alpha["preset"] in ALPHA_PRESETS or alpha["preset"] == "custom",
        f"model.alpha.preset: one of {sorted(ALPHA_PRESETS) + ['custom']}",
    )
    if alpha["preset"] == "custom":
        require(isinstance(alpha["expressions"], list), "model.alpha.expressions: required for the custom preset")
    require(_is_int(alpha["coordinate"]) and alpha["coordinate"] >= 0, "model.alpha.coordinate: index >= 0")

    integrator = cfg["integrator"]
    require(_is_number(integrator["dt"]) and integrator["dt"] > 0, "integrator.dt: must be > 0")
    require(_is_int(integrator["n_paths"]) and integrator["n_paths"] >= 1, "integrator.n_paths: integer >= 1")
    require(_is_int(integrator["seed"]) and integrator["seed"] >= 0, "integrator.seed: integer >= 0")
    require(
        integrator["scheme"] in {s.value for s in Scheme},
        f"integrator.scheme: one of {[s.value for s in Scheme]}",
    )
    require(_is_number(integrator["h"]) and 0 < integrator["h"] <= 0.1, "integrator.h: must lie in (0, 0.1]")
    require(integrator["derivative"] in ("crn", "tangent"), "integrator.derivative: 'crn' or 'tangent'")
    require(
        _is_number(integrator["max_blowup_fraction"]) and 0 <= integrator["max_blowup_fraction"] < 1,
        "integrator.max_blowup_fraction: must lie in [0, 1)",
    )

    experiment = cfg["experiment"]
    require(_is_number(experiment["t"]) and experiment["t"] >= 0, "experiment.t: must be >= 0")
    grid = experiment["t_grid"]
    require(
        grid is None or (isinstance(grid, list) and all(_is_number(t) and t >= 0 for t in grid)),
        "experiment.t_grid: list of times >= 0 or null",
    )
    require(
        experiment["x"] is None or (isinstance(experiment["x"], list) and all(_is_number(v) for v in experiment["x"])),
        "experiment.x: list of numbers or null",
    )
    require(isinstance(experiment["observable"], str) and experiment["observable"], "experiment.observable: expression")
    require(experiment["kappa"] is None or _is_number(experiment["kappa"]), "experiment.kappa: number or null")
    require(
        experiment["variant"] in ("standard", "optimal", "g_zero", "pointwise"),
        "experiment.variant: standard, optimal, g_zero or pointwise",
    )
    require(_is_number(experiment["q"]) and experiment["q"] > 1, "experiment.q: must be > 1")
    require(_is_number(experiment["delta"]) and experiment["delta"] > 0, "experiment.delta: must be > 0")
    require(
        experiment["record_every"] is None or (_is_int(experiment["record_every"]) and experiment["record_every"] >= 1),
        "experiment.record_every: integer >= 1 or null",
    )
    require(_is_number(experiment["t_burn"]) and experiment["t_burn"] >= 0, "experiment.t_burn: must be >= 0")
    require(_is_number(experiment["t_sample"]) and experiment["t_sample"] > 0, "experiment.t_sample: must be > 0")
    require(_is_int(experiment["thinning"]) and experiment["thinning"] >= 1, "experiment.thinning: integer >= 1")

    lattice = cfg["lattice"]
    require(_is_int(lattice["d"]) and 1 <= lattice["d"] <= 3, "lattice.d: 1, 2 or 3")
    require(_is_int(lattice["half_width"]) and lattice["half_width"] >= 1, "lattice.half_width: integer >= 1")
    require(
        _is_int(lattice["active_radius"]) and 0 <= lattice["active_radius"] <= lattice["half_width"],
        "lattice.active_radius: integer in [0, half_width]",
    )
    require(isinstance(lattice["support"], list) and bool(lattice["support"]), "lattice.support: non-empty site list")
    require(_is_int(lattice["coupling"]["range"]) and lattice["coupling"]["range"] >= 0, "lattice.coupling.range: >= 0")
    require(
        lattice["coupling"]["stencil"] is None or isinstance(lattice["coupling"]["stencil"], dict),
        "lattice.coupling.stencil: mapping of offsets to weights or null",
    )
    require(isinstance(lattice["probes"], list) and bool(lattice["probes"]), "lattice.probes: non-empty list")
    require(
        isinstance(lattice["radii"], list) and all(_is_int(r) and r >= 0 for r in lattice["radii"]),
        "lattice.radii: list of integers >= 0",
    )
    require(_is_number(lattice["zeta"]), "lattice.zeta: number")
    require(_is_number(lattice["K"]), "lattice.K: number")

    workers = cfg["workers"]
    require(workers is None or (_is_int(workers) and workers >= 1), "workers: integer >= 1 or null")

    if problems:
        raise ConfigSchemaError("invalid config:\n  " + "\n  ".join(problems))


# ----------------------------------------------------------------------
# model assembly
# ----------------------------------------------------------------------
def build_geometry(cfg: MasterConfig) -> Geometry:
    model = cfg["model"]
    if model["file"] is not None:
        with open(model["file"]) as f:
            return Geometry.from_json(json.load(f))
    return get_geometry(cast(str, model["geometry"]), model["dim"])


def build_model(cfg: MasterConfig, geometry: Optional[Geometry] = None) -> ModelSpec:
    geometry = geometry or build_geometry(cfg)
    model = cfg["model"]
    alpha = model["alpha"]
    if alpha["preset"] == "custom":
        drift = custom_drift(geometry, alpha["expressions"] or [], alpha["sup_bounds"], alpha["field_bounds"])
    else:
        drift = alpha_preset(alpha["preset"], geometry, alpha["amplitude"], alpha["coordinate"])
    return ModelSpec.create(geometry, model["beta"], model["G"], drift)


def estimator_config(cfg: MasterConfig) -> EstimatorConfig:
    integrator = cfg["integrator"]
    return EstimatorConfig(
        dt=float(integrator["dt"]),
        n_paths=int(integrator["n_paths"]),
        seed=int(integrator["seed"]),
        scheme=Scheme(integrator["scheme"]),
        h=float(integrator["h"]),
        richardson=bool(integrator["richardson"]),
        derivative=integrator["derivative"],
        max_blowup_fraction=float(integrator["max_blowup_fraction"]),
        workers=cfg["workers"],
    )


def build_lattice_model(cfg: MasterConfig, geometry: Optional[Geometry] = None) -> tuple[LatticeModel, CylinderFunction]:
    geometry = geometry or build_geometry(cfg)
    section = cfg["lattice"]
    d = int(section["d"])
    box = centred_box(d, int(section["half_width"]))
    radius = int(section["active_radius"])
    active = [
        s
        for s in itertools.product(*(range(lo, hi + 1) for lo, hi in box))
        if sum(abs(c) for c in s) <= radius
    ]
    coupling_cfg = section["coupling"]
    site_kwargs = {"site_function": coupling_cfg["site_function"], "coordinate": int(coupling_cfg["coordinate"])}
    if coupling_cfg["stencil"] is not None:
        coupling = CouplingSpec.from_stencil_json(coupling_cfg["amplitude"], coupling_cfg["stencil"], **site_kwargs)
        if any(len(v) != d for v in coupling.stencil):
            raise LatticeConfigError(f"lattice.coupling.stencil offsets must have {d} coordinates")
    else:
        coupling = CouplingSpec.neighbours(
            d, int(coupling_cfg["range"]), coupling_cfg["amplitude"], coupling_cfg["weight"], **site_kwargs
        )
    model = build_lattice(d, box, active, geometry, cfg["model"]["beta"], cfg["model"]["G"], coupling)
    support = [tuple(int(c) for c in s) for s in section["support"]]
    if any(len(s) != d for s in support):
        raise LatticeConfigError(f"lattice.support sites must have {d} coordinates")
    g = Observable.for_geometry(section["site_observable"], geometry)
    return model, CylinderFunction(model, support, g)


def uniform_configuration(model: LatticeModel, state: Sequence[float]) -> np.ndarray:
    """The per-site ``state`` repeated over every box site."""
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (model.N,):
        raise LatticeConfigError(f"per-site state must have {model.N} entries, got {state.shape}")
    return np.tile(state, model.n_sites)


def _start(cfg: MasterConfig, dim: int) -> np.ndarray:
    x = cfg["experiment"]["x"]
    return np.zeros(dim) if x is None else as_point(x, dim)


def _times(cfg: MasterConfig) -> list[float]:
    grid = cfg["experiment"]["t_grid"]
    return [float(t) for t in grid] if grid else [float(cfg["experiment"]["t"])]


# ----------------------------------------------------------------------
# experiment kinds
# ----------------------------------------------------------------------
@dataclass
class Outcome:
    report: dict[str, Any]
    csv_header: list[str] = field(default_factory=list)
    csv_rows: list[list[Any]] = field(default_factory=list)
    verdicts: list[dict[str, Any]] = field(default_factory=list)
    # per-step metrics for the logger backends
    metrics: list[dict[str, Any]] = field(default_factory=list)


def _check_outcome(checks: Sequence[BoundCheck], report: dict[str, Any]) -> Outcome:
    return Outcome(
        report={**report, "checks": [c.to_json() for c in checks]},
        csv_header=list(CSV_HEADER),
        csv_rows=[c.csv_row() for c in checks],
        verdicts=[{"kind": c.kind, "t": c.t, "verdict": c.verdict} for c in checks],
        metrics=[{"t": c.t, "lhs": c.lhs.value, "rhs": c.rhs.value, "margin": c.margin} for c in checks],
    )


def _run_geometry(cfg: MasterConfig) -> Outcome:
    geometry = build_geometry(cfg)
    geometry.validate()
    record = geometry.to_json()
    rows = [[e["k"], e["j"], e["l"], e["value"]] for e in record["c_nonzero"]]
    return Outcome(report={"geometry": record, "valid": True}, csv_header=["k", "j", "l", "c"], csv_rows=rows)


def _run_constants(cfg: MasterConfig) -> Outcome:
    spec = build_model(cfg)
    variant = cfg["experiment"]["variant"]
    if variant == "optimal":
        result = kappa_optimal(spec)
    elif variant == "g_zero":
        result = kappa_g_zero(spec)
    elif variant == "pointwise":
        result = kappa_pointwise(spec, list(_start(cfg, spec.geometry.N)))
    else:
        result = kappa(spec)
    report: dict[str, Any] = {"model": spec.to_json(), "kappa": result.to_json()}
    if spec.is_g_zero() and not spec.has_drift():
        report["lq"] = kappa_q(spec, cfg["experiment"]["q"]).to_json()
    rows = [[key, value] for key, value in result.to_json().items() if not isinstance(value, (dict, list))]
    return Outcome(report=report, csv_header=["name", "value"], csv_rows=rows, metrics=[{"kappa": float(result.kappa)}])


def _run_simulate(cfg: MasterConfig) -> Outcome:
    spec = build_model(cfg)
    system = assemble_sde(spec)
    config = estimator_config(cfg)
    integrator = config.integrator(float(cfg["experiment"]["t"]), record_every=cfg["experiment"]["record_every"])
    ensemble = integrate_paths(system, integrator, _start(cfg, system.dim), workers=config.workers)
    f = Observable.for_geometry(cfg["experiment"]["observable"], spec.geometry)
    mean, std_err = expectation(ensemble, f)
    report = {
        "model": spec.to_json(),
        "t": integrator.n_steps * integrator.dt,
        "n_paths": ensemble.n_paths,
        "dropped_paths": [{"path": p, "step": s} for p, s in ensemble.failures],
        "observable": f.text,
        "mean": EstimatorResult(mean, std_err, ensemble.n_paths, config.seed, config.dt).to_json(),
        "terminal_mean": ensemble.terminal[0].mean(axis=0).tolist(),
    }
    header = ["path_id", "step", "t"] + [f"x{i + 1}" for i in range(system.dim)]
    rows = ensemble.to_rows() if cfg["output"]["save_trajectories"] else []
    return Outcome(report=report, csv_header=header, csv_rows=rows, metrics=[{"mean": mean, "std_err": std_err}])


def _rate(cfg: MasterConfig) -> Optional[float]:
    value = cfg["experiment"]["kappa"]
    return None if value is None else float(value)


def _observable_checks(cfg: MasterConfig, check: Callable[..., BoundCheck]) -> Outcome:
    spec = build_model(cfg)
    system = assemble_sde(spec)
    config = estimator_config(cfg)
    f = Observable.for_geometry(cfg["experiment"]["observable"], spec.geometry)
    x = _start(cfg, system.dim)
    checks = [check(system, f, x, t, config) for t in _times(cfg)]
    return _check_outcome(checks, {"model": spec.to_json(), "observable": f.text, "x": x.tolist()})


def _run_grad(cfg: MasterConfig) -> Outcome:
    return _observable_checks(
        cfg, lambda system, f, x, t, config: check_gradient_bound(system, f, x, t, config, kappa=_rate(cfg))
    )


def _run_lq(cfg: MasterConfig) -> Outcome:
    q = float(cfg["experiment"]["q"])
    return _observable_checks(
        cfg, lambda system, f, x, t, config: check_lq_bound(system, f, x, t, q, config, kappa=_rate(cfg))
    )


def _run_poincare(cfg: MasterConfig) -> Outcome:
    return _observable_checks(
        cfg, lambda system, f, x, t, config: check_poincare(system, f, x, t, config, kappa=_rate(cfg))
    )


def _run_lyapunov(cfg: MasterConfig) -> Outcome:
    spec = build_model(cfg)
    system = assemble_sde(spec)
    if not cfg["experiment"]["t_grid"]:
        raise ConfigSchemaError("experiment.t_grid: the Lyapunov check needs a time grid")
    result = check_lyapunov(system, None, _start(cfg, system.dim), _times(cfg), estimator_config(cfg))
    rows = [[t, r.value, r.std_err] for t, r in zip(result.times, result.results)]
    outcome = "holds" if result.bounded else "violated"
    return Outcome(
        report={"model": spec.to_json(), "lyapunov": result.to_json()},
        csv_header=["t", "P_t_rho", "std_err"],
        csv_rows=rows,
        verdicts=[{"kind": "lyapunov", "t": result.times[-1], "verdict": outcome}],
        metrics=[{"t": t, "P_t_rho": r.value} for t, r in zip(result.times, result.results)],
    )


def _model_kappa(cfg: MasterConfig, spec: ModelSpec) -> float:
    rate = _rate(cfg)
    return float(kappa(spec).kappa) if rate is None else rate


def _run_expmoment(cfg: MasterConfig) -> Outcome:
    spec = build_model(cfg)
    config = estimator_config(cfg)
    experiment = cfg["experiment"]
    f = Observable.for_geometry(experiment["observable"], spec.geometry)
    rate = _model_kappa(cfg, spec)
    sample = empirical_invariant_measure(
        spec, _start(cfg, spec.geometry.N), experiment["t_burn"], experiment["t_sample"], experiment["thinning"], config
    )
    check = check_exp_moment(sample.flat, f, float(experiment["delta"]), rate, spec.geometry, config)
    return _check_outcome([check], {"model": spec.to_json(), "observable": f.text, "kappa": rate})


def _run_invariant(cfg: MasterConfig) -> Outcome:
    spec = build_model(cfg)
    config = estimator_config(cfg)
    experiment = cfg["experiment"]
    f = Observable.for_geometry(experiment["observable"], spec.geometry)
    x0 = _start(cfg, spec.geometry.N)
    rate = _model_kappa(cfg, spec)
    args = (experiment["t_burn"], experiment["t_sample"], experiment["thinning"], config)
    sample = empirical_invariant_measure(spec, x0, *args)
    poincare = invariant_poincare_check(sample, f, rate)
    consistency = invariant_self_consistency(spec, f, x0, *args, seeds=experiment["seeds"])
    outcome = _check_outcome([poincare], {"model": spec.to_json(), "observable": f.text, "kappa": rate})
    outcome.report["nu_f"] = sample.mean(f).to_json()
    outcome.report["self_consistency"] = consistency.to_json()
    outcome.verdicts.append(
        {"kind": "nu_self_consistency", "t": None, "verdict": "holds" if consistency.consistent else "violated"}
    )
    return outcome


def _probes(cfg: MasterConfig, model: LatticeModel) -> list[np.ndarray]:
    return [uniform_configuration(model, p) for p in cfg["lattice"]["probes"]]


def _run_lattice_constants(cfg: MasterConfig) -> Outcome:
    model, _ = build_lattice_model(cfg)
    constants = lattice_constants(model)
    section = cfg["lattice"]
    membership = omega_membership(
        model, uniform_configuration(model, section["omega"]), float(section["zeta"]), float(section["K"])
    )
    report = {"lattice": model.to_json(), "constants": constants.to_json(), "omega_class": membership.to_json()}
    rows = [[" ".join(map(str, k)), " ".join(map(str, j)), v] for (k, j), v in sorted(constants.M.items())]
    return Outcome(report=report, csv_header=["k", "j", "M"], csv_rows=rows)


def _run_speed(cfg: MasterConfig) -> Outcome:
    model, f = build_lattice_model(cfg)
    section = cfg["lattice"]
    config = estimator_config(cfg)
    t = float(cfg["experiment"]["t"])
    probes = _probes(cfg, model)
    constants = lattice_constants(model)
    profile = finite_speed_profile(model, f, t, probes, config, max_distance=section["max_distance"])
    omega = uniform_configuration(model, section["omega"])
    checks = check_gamma_lambda_decay(model, f, omega, t, config, constants=constants)
    if section["recursion_site"] is not None:
        grid = cfg["experiment"]["t_grid"] or [0.0, t / 2, t]
        if len(grid) < 2 or min(grid) != 0:
            raise ConfigSchemaError("experiment.t_grid: the recursion check needs a grid starting at 0")
        site = [int(c) for c in section["recursion_site"]]
        checks.append(check_local_recursion(model, f, omega, site, grid, probes, config, constants=constants))
    outcome = _check_outcome(
        checks,
        {"lattice": model.to_json(), "cylinder": f.to_json(), "probes": section["probes"], "profile": profile.to_json()},
    )
    outcome.csv_header = list(SPEED_CSV_HEADER)
    outcome.csv_rows = [r.csv_row() for r in profile.rows]
    outcome.verdicts.insert(
        0, {"kind": "finite_speed", "t": profile.t, "verdict": "holds" if profile.decays else "inconclusive"}
    )
    outcome.metrics = [{"n_k": r.n_k, "gamma_k": r.estimate.value} for r in profile.rows]
    return outcome


def _run_cauchy(cfg: MasterConfig) -> Outcome:
    model, f = build_lattice_model(cfg)
    series = volume_cauchy_series(
        model, f, cfg["lattice"]["radii"], float(cfg["experiment"]["t"]), _probes(cfg, model), estimator_config(cfg)
    )
    decays = series.fit is not None and series.fit.significant
    return Outcome(
        report={"lattice": model.to_json(), "cylinder": f.to_json(), "probes": cfg["lattice"]["probes"], "series": series.to_json()},
        csv_header=list(CAUCHY_CSV_HEADER),
        csv_rows=[p.csv_row() for p in series.points],
        verdicts=[{"kind": "volume_cauchy", "t": series.t, "verdict": "holds" if decays else "inconclusive"}],
        metrics=[{"n_bar": p.n_bar, "discrepancy": p.discrepancy.value} for p in series.points],
    )


def _run_ergodicity(cfg: MasterConfig) -> Outcome:
    model, f = build_lattice_model(cfg)
    section = cfg["lattice"]
    omega = uniform_configuration(model, section["omega"])
    omega_tilde = uniform_configuration(model, section["omega_tilde"])
    if not cfg["experiment"]["t_grid"]:
        raise ConfigSchemaError("experiment.t_grid: the ergodicity experiment needs a time grid")
    membership = [
        omega_membership(model, w, float(section["zeta"]), float(section["K"])).to_json() for w in (omega, omega_tilde)
    ]
    result = ergodicity_decay(model, f, omega, omega_tilde, _times(cfg), estimator_config(cfg))
    outcome = "inconclusive" if result.status == "not decaying" else "holds"
    return Outcome(
        report={"lattice": model.to_json(), "cylinder": f.to_json(), "omega_class": membership, "ergodicity": result.to_json()},
        csv_header=list(ERGODICITY_CSV_HEADER),
        csv_rows=result.csv_rows(),
        verdicts=[{"kind": "ergodicity", "t": result.times[-1], "verdict": outcome}],
        metrics=[{"t": t, "difference": d.value} for t, d in zip(result.times, result.differences)],
    )


RUNNERS: dict[str, Callable[[MasterConfig], Outcome]] = {
    "geometry": _run_geometry,
    "constants": _run_constants,
    "simulate": _run_simulate,
    "grad": _run_grad,
    "lq": _run_lq,
    "lyapunov": _run_lyapunov,
    "poincare": _run_poincare,
    "expmoment": _run_expmoment,
    "invariant": _run_invariant,
    "lattice_constants": _run_lattice_constants,
    "speed": _run_speed,
    "cauchy": _run_cauchy,
    "ergodicity": _run_ergodicity,
}


# ----------------------------------------------------------------------
# orchestration
# ----------------------------------------------------------------------
def _run_dir(cfg: MasterConfig) -> str:
    output = cfg["output"]
    if output["dir"] is not None:
        os.makedirs(output["dir"], exist_ok=True)
        return output["dir"]
    return get_next_experiment_dir(output["base_dir"])


def run(cfg: MasterConfig, replay_of: Optional[str] = None) -> RunManifest:
    """Execute one experiment and write its artifacts.

    The manifest's ``exit_code`` is EXIT_VIOLATED when any check is violated
    and EXIT_OK otherwise; failures propagate as exceptions.
    """
    timer = Timer()
    started_at = datetime.datetime.now(datetime.timezone.utc).isoformat()
    kind = cfg["kind"]
    seed = int(cfg["integrator"]["seed"])
    digest = config_hash(cfg)

    print(f"\n▶ Setting up {kind} run...")
    with timer.time("total"):
        with timer.time("setup"):
            run_dir = _run_dir(cfg)
            log_cfg = dict(cfg["logger"])
            log_cfg["log_dir"] = log_cfg["log_dir"] or run_dir
            metrics_logger = Logger(cast(Any, log_cfg))
            metrics_logger.log_hyperparams({"kind": kind, "seed": seed, "config_hash": digest})
        print(f"  ✓ Run directory {run_dir}")
        if kind in LATTICE_KINDS:
            print(f"  ✓ Lattice d={cfg['lattice']['d']}, half width {cfg['lattice']['half_width']}")

        print("\n" + "=" * 60)
        print(" " * 18 + "SETUP COMPLETE")
        print("=" * 60 + "\n")

        with timer.time("experiment"):
            outcome = RUNNERS[kind](cfg)

        with timer.time("write"):
            artifacts = [write_report(run_dir, outcome.report, seed, digest)]
            if outcome.csv_header:
                artifacts.append(write_csv(run_dir, kind, outcome.csv_header, outcome.csv_rows, seed, digest))
            for step, metrics in enumerate(outcome.metrics):
                metrics_logger.log_metrics(metrics, step, prefix=kind)
            metrics_logger.finish()

    violated = [v for v in outcome.verdicts if v["verdict"] == "violated"]
    exit_code = EXIT_VIOLATED if violated else EXIT_OK
    manifest: RunManifest = {
        "kind": kind,
        "version": __version__,
        "seed": seed,
        "config_hash": digest,
        "config": cfg,
        "started_at": started_at,
        "wall_clock": timer.reduce("total", "sum"),
        "timings": timer.get_timing_metrics("sum"),
        "verdicts": outcome.verdicts,
        "exit_code": exit_code,
        "run_dir": run_dir,
        "artifacts": [os.path.basename(p) for p in artifacts] + [METRICS_FILE, MANIFEST_FILE],
        "replay_of": replay_of,
    }
    write_manifest(run_dir, manifest)

    print(f"\n📊 {kind} results ({REPORT_FILE}):")
    for v in outcome.verdicts:
        print(f"  • {v['kind']} t={v['t']}: {v['verdict']}")
    print(f"\n⏱️  Total time: {manifest['wall_clock']:.2f}s")
    if violated:
        logger.warning(f"{len(violated)} check(s) violated")
    return manifest


def replay_config(manifest: RunManifest, output_dir: Optional[str] = None) -> MasterConfig:
    """Resolved config of a previous run, pointed at a fresh output directory."""
    cfg = dict(manifest["config"])
    output = dict(cfg["output"])
    output["dir"] = output_dir
    cfg["output"] = output
    logger_cfg = dict(cfg["logger"])
    logger_cfg["log_dir"] = None
    cfg["logger"] = logger_cfg
    return resolve_config(manifest["kind"], user=cfg)
