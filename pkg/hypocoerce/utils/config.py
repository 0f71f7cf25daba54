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
"""Experiment config files: YAML/JSON with ``defaults`` inheritance, Hydra overrides, struct merging."""

from pathlib import Path
from typing import Any, Mapping, Optional, Union, cast

from hydra._internal.config_loader_impl import ConfigLoaderImpl
from hydra.core.override_parser.overrides_parser import OverridesParser
from omegaconf import DictConfig, ListConfig, OmegaConf
from omegaconf.errors import OmegaConfBaseException

PathLike = Union[str, Path]


class OverridesError(Exception):
    """A ``key=value`` override could not be parsed or names a missing key."""


class ConfigSchemaError(ValueError):
    """Config file does not match the schema of its experiment kind."""


def resolve_path(base_path: Path, path: str) -> Path:
    return Path(path) if path.startswith("/") else base_path / path


def _read_mapping(config_path: Path) -> DictConfig:
    config = OmegaConf.load(config_path)
    if not isinstance(config, DictConfig):
        raise ConfigSchemaError(f"{config_path}: config must be a mapping, not a list")
    if len(config) == 0:
        raise ConfigSchemaError(f"{config_path}: config file is empty")
    return config


def _parent_names(config: DictConfig) -> list[str]:
    """Pop ``defaults`` (a single name or a list) off the config."""
    parents = config.pop("defaults")
    if isinstance(parents, ListConfig):
        return [str(p) for p in parents]
    return [str(parents)]


def load_config_with_inheritance(config_path: PathLike, base_dir: Optional[PathLike] = None) -> DictConfig:
    """Load ``config_path`` on top of the files named in its ``defaults`` key.

    Parents are resolved depth-first relative to ``base_dir`` (the file's own
    directory by default); later parents override earlier ones and the file
    itself overrides all of them.
    """
    config_path = Path(config_path)
    base = Path(base_dir) if base_dir is not None else config_path.parent
    config = _read_mapping(config_path)
    if "defaults" not in config:
        return config

    merged = OmegaConf.create({})
    for name in _parent_names(config):
        parent = load_config_with_inheritance(resolve_path(base, name), base)
        merged = OmegaConf.merge(merged, parent)
    return cast(DictConfig, OmegaConf.merge(merged, config))


def load_config(config_path: PathLike) -> DictConfig:
    """Load an experiment file with inheritance support.

    JSON files load the same way, JSON being a subset of YAML.

    1. Single inheritance:
        ```yaml
        # speed.yaml
        defaults: base.yaml
        experiment:
          t: 2.0
        ```

    2. Multiple inheritance:
        ```yaml
        defaults:
          - base.yaml
          - heisenberg.yaml
        ```

    3. Variable interpolation:
        ```yaml
        integrator:
          dt: 0.001
        experiment:
          t_grid: [0.0, "${integrator.dt}"]
        ```

    Raises:
        ConfigSchemaError: the file is empty or not a mapping
    """
    return load_config_with_inheritance(config_path)


def parse_hydra_overrides(cfg: DictConfig, overrides: list[str]) -> DictConfig:
    """Apply Hydra ``key=value`` overrides in place; only existing keys may change.

    Raises:
        OverridesError: an override is malformed or names a key the config lacks
    """
    OmegaConf.set_struct(cfg, True)
    try:
        parsed = OverridesParser.create().parse_overrides(overrides=overrides)
        ConfigLoaderImpl._apply_overrides_to_config(overrides=parsed, cfg=cfg)
    except Exception as e:
        raise OverridesError(f"Failed to apply overrides {overrides}: {e}") from e
    return cfg


def merge_onto_schema(schema: DictConfig, user: Union[DictConfig, Mapping[str, Any]]) -> DictConfig:
    """Merge ``user`` onto the packaged defaults in struct mode.

    Keys absent from the schema and values of the wrong type are rejected.
    """
    base = OmegaConf.create(OmegaConf.to_container(schema, resolve=False))
    OmegaConf.set_struct(base, True)
    try:
        merged = cast(DictConfig, OmegaConf.merge(base, user))
        OmegaConf.resolve(merged)
    except OmegaConfBaseException as e:
        raise ConfigSchemaError(str(e)) from e
    return merged


def to_plain(cfg: DictConfig) -> dict[str, Any]:
    """Resolved config as plain Python containers."""
    return cast(dict[str, Any], OmegaConf.to_container(cfg, resolve=True))
