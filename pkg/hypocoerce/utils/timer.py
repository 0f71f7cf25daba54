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
"""Wall-clock timings of the stages of a run, reported in the manifest."""

import time
from collections import defaultdict
from contextlib import contextmanager
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np

REDUCTIONS: dict[str, Callable[[Sequence[float]], float]] = {
    "mean": np.mean,
    "median": np.median,
    "min": np.min,
    "max": np.max,
    "std": np.std,
    "sum": np.sum,
    "count": len,
}


class Timer:
    """Named stage timer; a label may be timed repeatedly and reduced afterwards.

    ```
    timer = Timer()
    with timer.time("constants"):
        report = kappa(spec)
    for t in grid:
        with timer.time("estimate"):
            estimate_Ptf(spec, f, x, t, config)
    timer.reduce("estimate", "sum")
    ```
    """

    def __init__(self) -> None:
        self._timers: defaultdict[str, list[float]] = defaultdict(list)
        self._start_times: dict[str, float] = {}

    def start(self, label: str) -> None:
        if label in self._start_times:
            raise ValueError(f"stage '{label}' is already being timed")
        self._start_times[label] = time.perf_counter()

    def stop(self, label: str) -> float:
        """Elapsed seconds since ``start(label)``; the measurement is recorded."""
        started = self._start_times.pop(label, None)
        if started is None:
            raise ValueError(f"stage '{label}' is not being timed (running: {sorted(self._start_times)})")
        elapsed = time.perf_counter() - started
        self._timers[label].append(elapsed)
        return elapsed

    @contextmanager
    def time(self, label: str) -> Iterator[None]:
        self.start(label)
        try:
            yield
        finally:
            self.stop(label)

    def get_elapsed(self, label: str) -> list[float]:
        if not self._timers.get(label):
            raise KeyError(f"no timings recorded for '{label}'")
        return self._timers[label]

    def reduce(self, label: str, operation: str = "mean") -> float:
        """One of mean, median, min, max, std, sum or count over the measurements of ``label``."""
        reduction = REDUCTIONS.get(operation)
        if reduction is None:
            raise ValueError(f"unknown reduction '{operation}', expected one of {', '.join(REDUCTIONS)}")
        return float(reduction(self.get_elapsed(label)))

    def get_timing_metrics(self, reduction_op: Union[str, dict[str, str]] = "sum") -> dict[str, float | list[float]]:
        """Reduced timings per label; labels without a reduction keep their raw list."""
        ops = reduction_op if isinstance(reduction_op, dict) else dict.fromkeys(self._timers, reduction_op)
        return {
            label: self.reduce(label, ops[label]) if ops.get(label) in REDUCTIONS else list(values)
            for label, values in self._timers.items()
        }

    def reset(self, label: Optional[str] = None) -> None:
        if label is None:
            self._timers.clear()
            self._start_times.clear()
        else:
            self._timers.pop(label, None)
            self._start_times.pop(label, None)
