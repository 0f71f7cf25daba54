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
"""Metric sinks of a run (a JSONL file, optionally wandb) and console logging."""

import json
import logging
import math
import os
import re
from abc import ABC, abstractmethod
from typing import Any, Mapping, Optional, TypedDict

import wandb
from rich.logging import RichHandler

_rich_logging_configured = False


class WandbConfig(TypedDict):
    project: str
    name: str


class LoggerConfig(TypedDict):
    log_dir: str
    wandb_enabled: bool
    wandb: WandbConfig


class LoggerInterface(ABC):
    """A destination for per-step metrics and run parameters."""

    @abstractmethod
    def log_metrics(self, metrics: dict[str, Any], step: int, prefix: Optional[str] = "") -> None: ...

    @abstractmethod
    def log_hyperparams(self, params: Mapping[str, Any]) -> None: ...


def _prefixed(metrics: Mapping[str, Any], prefix: Optional[str]) -> dict[str, Any]:
    flat = flatten_dict(metrics)
    return {f"{prefix}/{k}": v for k, v in flat.items()} if prefix else flat


class JsonlLogger(LoggerInterface):
    """Appends one JSON object per call to ``metrics.jsonl``; non-finite floats become null."""

    def __init__(self, log_dir: str, filename: str = "metrics.jsonl"):
        self.path = os.path.join(log_dir, filename)

    def _write(self, record: dict[str, Any]) -> None:
        cleaned = {k: None if isinstance(v, float) and not math.isfinite(v) else v for k, v in record.items()}
        with open(self.path, "a") as f:
            f.write(json.dumps(cleaned) + "\n")

    def log_metrics(self, metrics: dict[str, Any], step: int, prefix: Optional[str] = "") -> None:
        self._write({"step": step, **_prefixed(metrics, prefix)})

    def log_hyperparams(self, params: Mapping[str, Any]) -> None:
        self._write({"hyperparams": True, **flatten_dict(params)})


class WandbLogger(LoggerInterface):
    def __init__(self, cfg: WandbConfig, log_dir: Optional[str] = None):
        self.run = wandb.init(**cfg, dir=log_dir)
        logging.getLogger(__name__).info(f"wandb run {cfg.get('name')} in project {cfg.get('project')}")

    def log_metrics(self, metrics: dict[str, Any], step: int, prefix: Optional[str] = "") -> None:
        self.run.log(_prefixed(metrics, prefix), step=step)

    def log_hyperparams(self, params: Mapping[str, Any]) -> None:
        self.run.config.update(params)


class Logger(LoggerInterface):
    """Fans metrics out to the JSONL file in ``log_dir`` and, when enabled, to wandb."""

    def __init__(self, cfg: LoggerConfig):
        self.base_log_dir = cfg["log_dir"]
        os.makedirs(self.base_log_dir, exist_ok=True)
        self.loggers: list[LoggerInterface] = [JsonlLogger(self.base_log_dir)]
        self.wandb_logger: Optional[WandbLogger] = None
        if cfg["wandb_enabled"]:
            wandb_dir = os.path.join(self.base_log_dir, "wandb")
            os.makedirs(wandb_dir, exist_ok=True)
            self.wandb_logger = WandbLogger(cfg["wandb"], log_dir=wandb_dir)
            self.loggers.append(self.wandb_logger)

    def log_metrics(self, metrics: dict[str, Any], step: int, prefix: Optional[str] = "") -> None:
        for sink in self.loggers:
            sink.log_metrics(metrics, step, prefix)

    def log_hyperparams(self, params: Mapping[str, Any]) -> None:
        for sink in self.loggers:
            sink.log_hyperparams(params)

    def finish(self) -> None:
        if self.wandb_logger is not None:
            self.wandb_logger.run.finish()


def flatten_dict(d: Mapping[str, Any], sep: str = ".") -> dict[str, Any]:
    """Flatten nested mappings and lists into dotted keys; list items are keyed by index.

    Examples:
        ```{doctest}
        >>> from hypocoerce.utils.logger import flatten_dict
        >>> flatten_dict({"kappa": 2, "check": {"lhs": 0.5}})
        {'kappa': 2, 'check.lhs': 0.5}

        >>> flatten_dict({"t": [1, 2], "fit": {"rate": [3, 4]}})
        {'t.0': 1, 't.1': 2, 'fit.rate.0': 3, 'fit.rate.1': 4}

        >>> flatten_dict({"checks": [{"lhs": 1}, {"rhs": 2}]})
        {'checks.0.lhs': 1, 'checks.1.rhs': 2}
        ```
    """

    def items(value: Any, key: str) -> list[tuple[str, Any]]:
        if isinstance(value, Mapping):
            children = [(str(k), v) for k, v in value.items()]
        elif isinstance(value, (list, tuple)):
            children = [(str(i), v) for i, v in enumerate(value)]
        else:
            return [(key, value)]
        return [pair for name, child in children for pair in items(child, f"{key}{sep}{name}" if key else name)]

    return dict(items(d, ""))


def configure_rich_logging(level: str = "INFO", show_time: bool = True, show_path: bool = True) -> None:
    """Install a rich console handler on the root logger, once per process."""
    global _rich_logging_configured
    if _rich_logging_configured:
        return
    handler = RichHandler(rich_tracebacks=True, show_time=show_time, show_path=show_path, markup=True)
    logging.basicConfig(level=level.upper(), format="%(message)s", datefmt="[%X]", handlers=[handler], force=True)
    _rich_logging_configured = True


def get_next_experiment_dir(base_log_dir: str) -> str:
    """Create and return ``<base_log_dir>/exp_NNN`` one past the highest existing id."""
    os.makedirs(base_log_dir, exist_ok=True)
    ids = [
        int(match.group(1))
        for name in os.listdir(base_log_dir)
        if (match := re.fullmatch(r"exp_(\d+)", name)) and os.path.isdir(os.path.join(base_log_dir, name))
    ]
    new_log_dir = os.path.join(base_log_dir, f"exp_{max(ids, default=0) + 1:03d}")
    os.makedirs(new_log_dir)
    return new_log_dir
