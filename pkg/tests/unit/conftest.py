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
import json
import os
import subprocess
import time
from datetime import datetime
from io import StringIO
from typing import TypedDict

import pytest
import ray

from hypocoerce.distributed.virtual_cluster import WORKERS_ENV_VAR, init_ray
from hypocoerce.semigroup.estimators import EstimatorConfig

TESTS_DIR = os.path.dirname(os.path.abspath(__file__))
UNIT_RESULTS_FILE = os.path.join(TESTS_DIR, "unit_results.json")
UNIT_RESULTS_HISTORY_DIR = os.path.join(TESTS_DIR, "unit_results")


class UnitTestData(TypedDict):
    exit_status: int | str
    git_commit: str
    start_time: str
    metrics: dict
    coverage: str


##############################
# Session results and hooks  #
##############################


def _git_commit() -> str:
    try:
        result = subprocess.run(
            ["git", "-C", TESTS_DIR, "rev-parse", "HEAD"], capture_output=True, text=True, check=True
        )
    except Exception as e:
        return f"unknown ({e})"
    return result.stdout.strip()


def pytest_configure(config):
    # pytest_configure (unlike pytest_sessionstart) also runs for this conftest when it is
    # discovered during collection, e.g. `pytest` from the project root via testpaths.
    if os.path.exists(UNIT_RESULTS_FILE):
        os.remove(UNIT_RESULTS_FILE)
    config._unit_test_data = UnitTestData(
        exit_status="was not set",
        git_commit=_git_commit(),
        start_time=datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
        metrics={},
        coverage="[n/a] run with --cov=hypocoerce",
    )


@pytest.fixture(scope="session", autouse=True)
def session_data(request):
    """Results of the whole session; the coverage summary is added at the end when pytest-cov is active."""
    data: UnitTestData = request.config._unit_test_data
    yield data
    plugin = request.config.pluginmanager.getplugin("_cov")
    controller = getattr(plugin, "cov_controller", None)
    if controller:
        data["coverage"] = controller.summary(StringIO())


@pytest.fixture
def tracker(request, session_data):
    """Record numbers worth keeping from a test (estimates, margins) under its qualified name."""
    metrics = session_data["metrics"].setdefault(f"{request.module.__name__}::{request.function.__name__}", {})

    class Tracker:
        def track(self, metric_name: str, value):
            metrics[metric_name] = value

    start_time = time.time()
    yield Tracker()
    metrics["_elapsed"] = time.time() - start_time


def pytest_sessionfinish(session, exitstatus):
    data = session.config._unit_test_data
    data["exit_status"] = exitstatus
    os.makedirs(UNIT_RESULTS_HISTORY_DIR, exist_ok=True)
    dated = os.path.join(UNIT_RESULTS_HISTORY_DIR, f"{datetime.now().strftime('%Y%m%d_%H%M%S')}.json")
    for path in (UNIT_RESULTS_FILE, dated):
        with open(path, "w") as f:
            json.dump(data, f, indent=2)
    print(f"\nSaved unit test data to {UNIT_RESULTS_FILE} and {dated}")


################
# Ray Fixtures #
################


@pytest.fixture(scope="session")
def init_ray_cluster():
    """Start Ray once for the tests that fan path blocks out to workers."""
    init_ray(num_cpus=2)
    yield
    ray.shutdown()


@pytest.fixture(autouse=True)
def single_worker(monkeypatch, request):
    """Keep path blocks in-process unless a test asks for the Ray cluster."""
    if "init_ray_cluster" not in request.fixturenames:
        monkeypatch.setenv(WORKERS_ENV_VAR, "1")
    else:
        monkeypatch.delenv(WORKERS_ENV_VAR, raising=False)


######################
# Estimator Fixtures #
######################


@pytest.fixture
def small_config():
    """Few paths and a coarse step; enough for structural assertions."""
    return EstimatorConfig(dt=0.01, n_paths=256, seed=7, workers=1)


@pytest.fixture
def oracle_config():
    """Settings for the Ornstein-Uhlenbeck closed-form checks."""
    return EstimatorConfig(dt=0.002, n_paths=20_000, seed=11, workers=1)
