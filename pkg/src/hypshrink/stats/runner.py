"""Worker pool that spreads estimator kernels over sample chunks."""

# Copyright 2023 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import concurrent.futures as cf
import logging
import pickle

from typing import Any, Callable, Dict, List

import numpy as np

from hypshrink.errors import InvalidArgumentError
from hypshrink.geometry.types import RepBatch

logger = logging.getLogger(__name__)

Kernel = Callable[..., Dict[str, Any]]


class Runner:
    """Runs a kernel over fixed chunks of a sample batch.

    Chunk boundaries depend only on the sample count, and results are
    gathered by chunk index, so output does not depend on the worker count.
    """

    def __init__(self, workers: int = 1, chunk_size: int = 64):
        if workers < 1:
            raise InvalidArgumentError(f"workers={workers} must be >= 1")

        if chunk_size < 1:
            raise InvalidArgumentError(f"chunk_size={chunk_size} must be >= 1")

        self.workers = workers
        self.chunk_size = chunk_size

    def chunks(self, count: int) -> List[slice]:
        return [
            slice(start, min(start + self.chunk_size, count))
            for start in range(0, count, self.chunk_size)
        ]

    @staticmethod
    def picklable(*objs) -> bool:
        try:
            pickle.dumps(objs)
        except (pickle.PicklingError, AttributeError, TypeError):
            return False

        return True

    @staticmethod
    def merge(results: List[Dict[str, Any]]) -> Dict[str, Any]:
        """Concatenates per-chunk outputs along the sample axis."""
        merged: Dict[str, Any] = {}
        if not results:
            return merged

        for key in results[0]:
            parts = [res[key] for res in results]
            if isinstance(parts[0], np.ndarray):
                merged[key] = np.concatenate(parts, axis=0)
            else:
                merged[key] = [item for part in parts for item in part]

        return merged

    def map(self, kernel: Kernel, batch: RepBatch, **kwargs) -> Dict[str, Any]:
        tasks = [batch.take(sl) for sl in self.chunks(len(batch))]

        if self.workers == 1 or len(tasks) == 1:
            return self.merge([kernel(task, **kwargs) for task in tasks])

        if not self.picklable(kernel, kwargs):
            logger.warning(
                "kernel arguments cannot be sent to worker processes; "
                "running %d chunks in process", len(tasks))

            return self.merge([kernel(task, **kwargs) for task in tasks])

        results: List[Dict[str, Any]] = [None] * len(tasks)
        with cf.ProcessPoolExecutor(max_workers=self.workers) as ex:
            futs = {
                ex.submit(kernel, task, **kwargs): idx
                for idx, task in enumerate(tasks)
            }
            for fut in cf.as_completed(futs):
                results[futs[fut]] = fut.result()

        return self.merge(results)
