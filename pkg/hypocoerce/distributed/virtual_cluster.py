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
import logging
import os
from typing import Optional

import ray

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

WORKERS_ENV_VAR = "HYPOCOERCE_WORKERS"
LOCAL_CLUSTER_TAG = "hypocoerce_local_cluster"
SLURM_MANAGED_TAG = "slurm_managed_ray_cluster"


def resolve_worker_count(requested: Optional[int] = None) -> int:
    """Number of path-block workers: ``requested`` (default: all cores), capped by HYPOCOERCE_WORKERS."""
    count = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(WORKERS_ENV_VAR)
    if cap is not None:
        try:
            cap_value = int(cap)
        except ValueError as e:
            raise ValueError(f"{WORKERS_ENV_VAR}={cap!r} is not an integer") from e
        if cap_value < 1:
            raise ValueError(f"{WORKERS_ENV_VAR}={cap_value} must be at least 1")
        count = min(count, cap_value)
    if count < 1:
        raise ValueError(f"worker count must be at least 1, got {count}")
    return count


def init_ray(log_dir: Optional[str] = None, num_cpus: Optional[int] = None) -> None:
    """Initialise Ray.

    Try to attach to an existing cluster. A cluster this package started
    earlier (tagged) or a Slurm-managed one is reused; any other cluster is
    detached from and a fresh local cluster is started.
    """
    if ray.is_initialized():
        return

    runtime_env = {"env_vars": {WORKERS_ENV_VAR: os.environ.get(WORKERS_ENV_VAR, "")}}
    temp_dir = os.path.abspath(log_dir) if log_dir else None

    try:
        ray.init(
            address="auto",
            log_to_driver=True,
            include_dashboard=False,
            runtime_env=runtime_env,
            _temp_dir=temp_dir,
        )
        cluster_res = ray.cluster_resources()
        if LOCAL_CLUSTER_TAG in cluster_res:
            logger.info(f"Connected to existing Ray cluster (tag '{LOCAL_CLUSTER_TAG}'): {cluster_res}")
            return
        if SLURM_MANAGED_TAG in cluster_res:
            logger.info(f"Connected to existing SLURM-managed Ray cluster: {cluster_res}")
            return
        logger.info(
            f"Existing Ray cluster found ({cluster_res}) but it was not started by hypocoerce. "
            "Starting a new local cluster..."
        )
        ray.shutdown()
    except ConnectionError:
        logger.debug("No existing Ray cluster found, will start a new one.")
        ray.shutdown()

    ray.init(
        log_to_driver=True,
        include_dashboard=False,
        runtime_env=runtime_env,
        num_cpus=num_cpus,
        _temp_dir=temp_dir,
        resources={LOCAL_CLUSTER_TAG: 1},
    )
    logger.info(f"Started local cluster with tag '{LOCAL_CLUSTER_TAG}': {ray.cluster_resources()}")
