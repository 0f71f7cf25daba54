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
"""Fan fixed path blocks out to Ray tasks and gather them back in block order."""

import logging
from typing import Any, Callable, Optional, Sequence, TypeVar

import ray

from hypocoerce.distributed.utils import chunk_list_to_workers
from hypocoerce.distributed.virtual_cluster import init_ray, resolve_worker_count

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@ray.remote
def _run_chunk(fn: Callable[..., Any], chunk: list[Any], *args: Any) -> list[Any]:
    return [fn(task, *args) for task in chunk]


def run_path_blocks(
    fn: Callable[..., R],
    tasks: Sequence[T],
    *args: Any,
    workers: Optional[int] = None,
) -> list[R]:
    """Evaluate ``fn(task, *args)`` for every task; results are in task order.

    Each task must be self-contained (its noise keys derive from the task
    itself), so the output does not depend on ``workers``. With one worker,
    or a single task, everything runs in the calling process.
    """
    tasks = list(tasks)
    workers = resolve_worker_count(workers)
    if workers == 1 or len(tasks) <= 1:
        return [fn(task, *args) for task in tasks]

    init_ray(num_cpus=workers)
    shared = [ray.put(arg) for arg in args]
    chunks = [chunk for chunk in chunk_list_to_workers(tasks, workers) if chunk]
    logger.debug(f"running {len(tasks)} path blocks as {len(chunks)} Ray tasks")
    futures = [_run_chunk.remote(fn, chunk, *shared) for chunk in chunks]
    results: list[R] = []
    for chunk_result in ray.get(futures):
        results.extend(chunk_result)
    return results
