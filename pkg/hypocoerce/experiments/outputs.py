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
"""Artifact files of a run.

Every artifact carries the run seed and the hash of the resolved config: JSON
files as top-level ``seed``/``config_hash`` keys, CSV files as a first comment
line ``# seed=<seed> config_hash=<hash>``.
"""

import csv
import hashlib
import json
import math
import os
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from hypocoerce.experiments.interfaces import RunManifest

REPORT_FILE = "report.json"
MANIFEST_FILE = "manifest.json"
METRICS_FILE = "metrics.jsonl"


def config_hash(config: Mapping[str, Any]) -> str:
    """Stable short hash of a resolved config.

    >>> config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    True
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else value.numerator
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(path: str, payload: Mapping[str, Any], seed: int, digest: str) -> str:
    with open(path, "w") as f:
        json.dump({"seed": seed, "config_hash": digest, **_plain(payload)}, f, indent=2)
        f.write("\n")
    return path


def write_report(run_dir: str, report: Mapping[str, Any], seed: int, digest: str) -> str:
    return write_json(os.path.join(run_dir, REPORT_FILE), report, seed, digest)


def write_csv(
    run_dir: str,
    kind: str,
    header: Sequence[str],
    rows: Sequence[Sequence[Any]],
    seed: int,
    digest: str,
) -> str:
    path = os.path.join(run_dir, f"{kind}.csv")
    with open(path, "w", newline="") as f:
        f.write(f"# seed={seed} config_hash={digest}\n")
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else v for v in _plain(list(row))])
    return path


def write_manifest(run_dir: str, manifest: RunManifest) -> str:
    path = os.path.join(run_dir, MANIFEST_FILE)
    with open(path, "w") as f:
        json.dump(_plain(dict(manifest)), f, indent=2)
        f.write("\n")
    return path


def read_csv(path: str) -> tuple[str, list[str], list[list[str]]]:
    """Header comment, column names and rows of an artifact CSV."""
    with open(path, newline="") as f:
        comment = f.readline().rstrip("\n")
        reader = csv.reader(f)
        columns = next(reader)
        return comment, columns, [row for row in reader]


def load_manifest(path: str) -> RunManifest:
    with open(path) as f:
        manifest = json.load(f)
    if "config" not in manifest or "kind" not in manifest:
        raise ValueError(f"{path} is not a run manifest")
    return manifest
