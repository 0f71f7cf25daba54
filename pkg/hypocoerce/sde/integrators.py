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
"""Path integrators for DiffusionProcess systems.

Paths are processed in fixed blocks of PATH_BLOCK_SIZE. A block integrates Q
initial conditions at once against the same noise (common random numbers) and,
optionally, the tangent process, i.e. the exact derivative of the discrete
step map applied to a direction v₀.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, NamedTuple, Optional, Sequence

import numpy as np

from hypocoerce.distributed.path_blocks import run_path_blocks
from hypocoerce.polyfield.vector_field import PolyVectorField
from hypocoerce.sde.rng import PATH_BLOCK_SIZE, block_ranges
from hypocoerce.sde.system import DiffusionProcess

logger = logging.getLogger(__name__)

FLOW_STEP_LIMIT = 0.1


class Scheme(str, Enum):
    HEUN_STRATONOVICH = "heun_stratonovich"
    EULER_ITO_CORRECTED = "euler_ito_corrected"


class NumericalBlowupError(RuntimeError):
    """A path produced a non-finite state and the blow-up quota was exceeded."""

    def __init__(self, path: int, step: int, n_failed: int = 1):
        self.path = path
        self.step = step
        self.n_failed = n_failed
        super().__init__(
            f"non-finite state on path {path} at step {step} ({n_failed} path(s) failed)"
        )


class FlowStepError(ValueError):
    """flow_exp was asked for a step larger than FLOW_STEP_LIMIT."""


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    seed: int
    n_paths: int
    scheme: Scheme = Scheme.HEUN_STRATONOVICH
    # keep a snapshot every ``record_every`` steps (None: terminal state only)
    record_every: Optional[int] = None
    # fraction of paths allowed to blow up before NumericalBlowupError
    max_blowup_fraction: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be at least 1, got {self.n_paths}")
        if self.record_every is not None and self.record_every < 1:
            raise ValueError(f"record_every must be positive, got {self.record_every}")
        if not 0.0 <= self.max_blowup_fraction < 1.0:
            raise ValueError(f"max_blowup_fraction must lie in [0, 1), got {self.max_blowup_fraction}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def snapshot_steps(self) -> list[int]:
        """Step indices at which states are recorded (0 is the initial state)."""
        if self.record_every is None:
            return [self.n_steps]
        steps = list(range(0, self.n_steps + 1, self.record_every))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return steps


class _BlockResult(NamedTuple):
    snapshots: np.ndarray  # (S, Q, L, N)
    tangents: Optional[np.ndarray]  # (S, Q, L, N)
    alive: np.ndarray  # (L,)
    failures: list[tuple[int, int]]  # (global path, step)


@dataclass
class PathEnsemble:
    """States of all paths at the recorded times.

    ``snapshots`` has shape (S, Q, P, N) for S recorded times, Q initial
    conditions and P paths; failed paths are masked out by ``alive``.
    """

    times: np.ndarray
    snapshots: np.ndarray
    alive: np.ndarray
    config: IntegratorConfig
    tangents: Optional[np.ndarray] = None
    failures: list[tuple[int, int]] = field(default_factory=list)

    @property
    def n_paths(self) -> int:
        return int(self.alive.sum())

    @property
    def terminal(self) -> np.ndarray:
        """Final states of the surviving paths, (Q, P_alive, N)."""
        return self.snapshots[-1][:, self.alive]

    def final(self, q: int = 0) -> np.ndarray:
        return self.snapshots[-1, q][self.alive]

    def at(self, index: int, q: int = 0) -> np.ndarray:
        return self.snapshots[index, q][self.alive]

    def final_tangent(self, q: int = 0) -> np.ndarray:
        if self.tangents is None:
            raise ValueError("ensemble was integrated without a tangent direction")
        return self.tangents[-1, q][self.alive]

    def to_rows(self, q: int = 0) -> list[list[float]]:
        """Trajectory rows path_id, step, t, x_1..x_N for every recorded state."""
        steps = self.config.snapshot_steps()
        rows = []
        for path in np.flatnonzero(self.alive):
            for s, (step, t) in enumerate(zip(steps, self.times)):
                rows.append([int(path), int(step), float(t), *self.snapshots[s, q, path].tolist()])
        return rows


def _step(
    system: DiffusionProcess,
    scheme: Scheme,
    x: np.ndarray,
    dW: np.ndarray,
    dt: float,
    v: Optional[np.ndarray],
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    if scheme is Scheme.EULER_ITO_CORRECTED:
        new_x = x + system.drift(x, ito=True) * dt + system.diffusion_apply(x, dW)
        if v is None:
            return new_x, None
        new_v = v + system.drift_jvp(x, v, ito=True) * dt + system.diffusion_jvp(x, v, dW)
        return new_x, new_v

    b0 = system.drift(x, ito=False)
    a0 = system.diffusion_apply(x, dW)
    predictor = x + b0 * dt + a0
    new_x = x + 0.5 * (b0 + system.drift(predictor, ito=False)) * dt + 0.5 * (
        a0 + system.diffusion_apply(predictor, dW)
    )
    if v is None:
        return new_x, None
    db0 = system.drift_jvp(x, v, ito=False)
    da0 = system.diffusion_jvp(x, v, dW)
    v_predictor = v + db0 * dt + da0
    new_v = v + 0.5 * (db0 + system.drift_jvp(predictor, v_predictor, ito=False)) * dt + 0.5 * (
        da0 + system.diffusion_jvp(predictor, v_predictor, dW)
    )
    return new_x, new_v


def integrate_block(
    task: tuple[int, int, int],
    system: DiffusionProcess,
    config: IntegratorConfig,
    x0: np.ndarray,
    direction: Optional[np.ndarray] = None,
) -> _BlockResult:
    """Integrate paths [start, stop) of one block for all initial conditions ``x0`` (Q, N)."""
    block, start, stop = task
    size = stop - start
    Q, N = x0.shape
    x = np.broadcast_to(x0[:, None, :], (Q, size, N)).copy()
    v = None if direction is None else np.broadcast_to(direction[:, None, :], (Q, size, N)).copy()
    alive = np.ones(size, dtype=bool)
    failures: list[tuple[int, int]] = []

    record = set(config.snapshot_steps())
    snapshots = [x.copy()] if 0 in record else []
    tangent_snapshots = [v.copy()] if (v is not None and 0 in record) else []

    for step in range(config.n_steps):
        dW = system.increments(config.seed, step, block, size, config.dt)
        with np.errstate(over="ignore", invalid="ignore"):
            new_x, new_v = _step(system, config.scheme, x, dW, config.dt, v)
        finite = np.isfinite(new_x).all(axis=(0, -1))
        if new_v is not None:
            finite &= np.isfinite(new_v).all(axis=(0, -1))
        newly_failed = alive & ~finite
        for index in np.flatnonzero(newly_failed):
            failures.append((start + int(index), step))
        alive &= finite
        # failed paths stay frozen at their last finite state
        x = np.where(alive[None, :, None], new_x, x)
        if v is not None and new_v is not None:
            v = np.where(alive[None, :, None], new_v, v)
        if step + 1 in record:
            snapshots.append(x.copy())
            if v is not None:
                tangent_snapshots.append(v.copy())

    return _BlockResult(
        snapshots=np.stack(snapshots),
        tangents=np.stack(tangent_snapshots) if v is not None else None,
        alive=alive,
        failures=failures,
    )


def _as_batch(x0: Any, dim: int) -> np.ndarray:
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim == 1:
        x0 = x0[None, :]
    if x0.ndim != 2 or x0.shape[1] != dim:
        raise ValueError(f"initial conditions must have shape (Q, {dim}) or ({dim},), got {x0.shape}")
    return x0


def integrate_paths(
    system: DiffusionProcess,
    config: IntegratorConfig,
    x0: Any,
    direction: Optional[Any] = None,
    workers: Optional[int] = None,
) -> PathEnsemble:
    """Simulate ``config.n_paths`` paths from every initial condition in ``x0``.

    All initial conditions share the noise of each path. The result depends
    only on (system, config, x0, direction), never on ``workers``.
    """
    x0 = _as_batch(x0, system.dim)
    tangent = None if direction is None else np.broadcast_to(
        _as_batch(direction, system.dim), x0.shape
    ).copy()
    tasks = block_ranges(config.n_paths, PATH_BLOCK_SIZE)
    blocks = run_path_blocks(integrate_block, tasks, system, config, x0, tangent, workers=workers)

    failures = [failure for block in blocks for failure in block.failures]
    if len(failures) > config.max_blowup_fraction * config.n_paths:
        path, step = min(failures, key=lambda item: (item[1], item[0]))
        raise NumericalBlowupError(path, step, len(failures))
    if failures:
        logger.warning(f"dropped {len(failures)} of {config.n_paths} paths with non-finite states")

    steps = config.snapshot_steps()
    return PathEnsemble(
        times=np.array(steps, dtype=np.float64) * config.dt,
        snapshots=np.concatenate([block.snapshots for block in blocks], axis=2),
        alive=np.concatenate([block.alive for block in blocks]),
        config=config,
        tangents=(
            np.concatenate([block.tangents for block in blocks], axis=2)  # type: ignore[misc]
            if tangent is not None
            else None
        ),
        failures=failures,
    )


def tangent_paths(
    system: DiffusionProcess,
    config: IntegratorConfig,
    x0: Any,
    direction: Any,
    workers: Optional[int] = None,
) -> PathEnsemble:
    """Paths together with the tangent process J_t v₀ under the same noise keys."""
    return integrate_paths(system, config, x0, direction=direction, workers=workers)


def flow_exp(V: PolyVectorField, x: Any, h: float) -> np.ndarray:
    """One RK4 step of ẏ = V(y) from y(0) = x to time h; points have shape (..., N)."""
    if abs(h) > FLOW_STEP_LIMIT:
        raise FlowStepError(f"flow step |h| = {abs(h)} exceeds {FLOW_STEP_LIMIT}")
    y = np.asarray(x, dtype=np.float64)
    k1 = V.evaluate_numpy(y)
    k2 = V.evaluate_numpy(y + 0.5 * h * k1)
    k3 = V.evaluate_numpy(y + 0.5 * h * k2)
    k4 = V.evaluate_numpy(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def flow_commutator(V: PolyVectorField, W: PolyVectorField, x: Any, h: float) -> np.ndarray:
    """Finite-flow estimate of [V, W](x).

    The loop flows along V, W, −V, −W in turn; the displacement is ≈ h²[V, W].
    The h and −h loops are averaged to cancel the O(h³) term.
    """

    def loop(step: float) -> np.ndarray:
        y = np.asarray(x, dtype=np.float64)
        for field_, sign in ((V, 1.0), (W, 1.0), (V, -1.0), (W, -1.0)):
            y = flow_exp(field_, y, sign * step)
        return (y - np.asarray(x, dtype=np.float64)) / step**2

    return 0.5 * (loop(h) + loop(-h))


def expectation(ensemble: PathEnsemble, f: Callable[[np.ndarray], np.ndarray], q: int = 0) -> tuple[float, float]:
    """Monte Carlo mean of f(ξ_t) and its standard error over surviving paths."""
    values = np.asarray(f(ensemble.final(q)), dtype=np.float64)
    n = values.shape[0]
    std_err = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return float(values.mean()), std_err


def stack_initial_conditions(points: Sequence[Any]) -> np.ndarray:
    return np.stack([np.asarray(p, dtype=np.float64) for p in points])
