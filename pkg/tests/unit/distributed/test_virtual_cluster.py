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
import os

import pytest

from hypocoerce.distributed.utils import chunk_list_to_workers
from hypocoerce.distributed.virtual_cluster import WORKERS_ENV_VAR, resolve_worker_count


def test_default_is_every_core(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV_VAR, raising=False)
    assert resolve_worker_count() == (os.cpu_count() or 1)
    assert resolve_worker_count(3) == 3


def test_env_caps_the_count(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV_VAR, "1")
    assert resolve_worker_count(8) == 1


@pytest.mark.parametrize("value", ["many", "0"])
def test_bad_env_values(monkeypatch, value):
    monkeypatch.setenv(WORKERS_ENV_VAR, value)
    with pytest.raises(ValueError):
        resolve_worker_count()


def test_requested_count_must_be_positive(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV_VAR, raising=False)
    with pytest.raises(ValueError):
        resolve_worker_count(0)


def test_chunks_keep_block_order():
    blocks = list(range(10))
    chunks = chunk_list_to_workers(blocks, 3)
    assert len(chunks) == 3
    assert [b for chunk in chunks for b in chunk] == blocks
    assert chunk_list_to_workers([], 2) == [[], []]
    with pytest.raises(ValueError):
        chunk_list_to_workers(blocks, 0)
