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
from typing import Any


def chunk_list_to_workers(to_chunk: list[Any], num_workers: int) -> list[list[Any]]:
    """Split an ordered list of path blocks into contiguous per-worker chunks.

    Concatenating the chunks gives back the original list, so results gathered
    chunk by chunk come back in block order. When there are more workers than
    blocks, the trailing workers get empty chunks.

    Args:
        to_chunk: The blocks to distribute.
        num_workers: The number of workers.

    Returns:
        Exactly ``num_workers`` lists.

    Examples:
    ```{doctest}
    >>> from hypocoerce.distributed.utils import chunk_list_to_workers
    >>> chunk_list_to_workers([1, 2, 3, 4, 5], 3)
    [[1, 2], [3, 4], [5]]
    >>> chunk_list_to_workers([1], 2)
    [[1], []]
    ```
    """
    if num_workers < 1:
        raise ValueError(f"num_workers must be positive, got {num_workers}")
    if not to_chunk:
        return [[] for _ in range(num_workers)]

    if len(to_chunk) <= num_workers:
        result = [[item] for item in to_chunk]
        result.extend([[] for _ in range(num_workers - len(to_chunk))])
        return result

    # ceiling division covers every block
    chunk_size = (len(to_chunk) + num_workers - 1) // num_workers
    chunks = [to_chunk[i : i + chunk_size] for i in range(0, len(to_chunk), chunk_size)]
    chunks.extend([[] for _ in range(num_workers - len(chunks))])
    return chunks
