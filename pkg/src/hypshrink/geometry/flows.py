"""Discrete flows, unipotent Z^d actions and long orbit iteration."""

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

import itertools
import logging
import math

from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from hypshrink.errors import DriftError, InvalidArgumentError
from hypshrink.geometry.group_core import DRIFT_LIMIT, GroupCore
from hypshrink.geometry.lattice import Lattices
from hypshrink.geometry.types import (
    DIAGONALIZABLE,
    FlowSpec,
    GroupElement,
    ModelParams,
    OrbitCursor,
    QuotientPoint,
    RepBatch,
    UNIPOTENT,
)

logger = logging.getLogger(__name__)


class Flows:
    """Construction and evaluation of flows acting on the right."""

    @staticmethod
    def diagonalizable(
        step: float = 1.0, conjugator: Optional[GroupElement] = None
    ) -> FlowSpec:
        if not step > 0 or not math.isfinite(step):
            raise InvalidArgumentError(
                f"diagonalizable step c={step} must be finite and > 0")

        return FlowSpec(kind=DIAGONALIZABLE, step=step, conjugator=conjugator)

    @staticmethod
    def unipotent(basis) -> FlowSpec:
        vectors = np.atleast_2d(np.asarray(basis, dtype=np.float64))

        if np.linalg.matrix_rank(vectors) < vectors.shape[0]:
            raise InvalidArgumentError(
                "unipotent basis vectors must be linearly independent")

        return FlowSpec(kind=UNIPOTENT, basis=vectors)

    @staticmethod
    def check_model(spec: FlowSpec, model: ModelParams):
        """Raises if the flow cannot act in the given model."""
        if spec.kind == UNIPOTENT:
            if spec.basis.shape[1] != model.n - 1:
                raise InvalidArgumentError(
                    f"unipotent basis vectors need dimension {model.n - 1}")

            if not 1 <= spec.rank <= model.n - 1:
                raise InvalidArgumentError(
                    f"unipotent rank {spec.rank} outside [1, {model.n - 1}]")

        if spec.conjugator is not None and spec.conjugator.model != model:
            raise InvalidArgumentError("conjugator model mismatch")

    @staticmethod
    def flow_element(
        spec: FlowSpec, k: Union[int, Sequence[int]], model: ModelParams
    ) -> GroupElement:
        """g_k for a flow, n_{sum k_i b_i} for a unipotent action."""
        Flows.check_model(spec, model)

        if spec.kind == DIAGONALIZABLE:
            k_val = int(np.atleast_1d(k)[0])
            diag = GroupCore.make_diag(spec.step * k_val, model)

            if spec.conjugator is None:
                return diag

            conj = spec.conjugator
            return GroupCore.compose(
                GroupCore.compose(GroupCore.inverse(conj), diag), conj)

        k_vec = np.atleast_1d(np.asarray(k, dtype=np.float64))
        if k_vec.shape[0] != spec.rank:
            raise InvalidArgumentError(
                f"index {k} does not match unipotent rank {spec.rank}")

        return GroupCore.make_unipotent(k_vec @ spec.basis, model)

    @staticmethod
    def step_elements(spec: FlowSpec, model: ModelParams) -> List[GroupElement]:
        """Generators of the action: g_1, or n_{b_i} per basis vector."""
        if spec.kind == DIAGONALIZABLE:
            return [Flows.flow_element(spec, 1, model)]

        return [
            Flows.flow_element(spec, np.eye(spec.rank, dtype=int)[i], model)
            for i in range(spec.rank)
        ]

    @staticmethod
    def advance(cursor: OrbitCursor, spec: FlowSpec) -> OrbitCursor:
        """Moves the cursor one step along the orbit x g_m."""
        lat = cursor.current.lattice
        step = Flows.step_elements(spec, lat.model)[0]
        rep = GroupCore.compose(cursor.current.rep, step)

        next_index = cursor.step_index + 1
        if next_index % cursor.renorm_cadence == 0:
            rep = GroupCore.renormalize(rep)

        return OrbitCursor(
            Lattices.reduce(rep, lat), next_index, cursor.renorm_cadence)

    @staticmethod
    def orbit_point(
        start: QuotientPoint, spec: FlowSpec, m: int
    ) -> QuotientPoint:
        """reduce(start . g_m) computed directly from the matrix power."""
        lat = start.lattice

        return Lattices.reduce(
            GroupCore.compose(start.rep, Flows.flow_element(spec, m, lat.model)),
            lat)

    @staticmethod
    def forward_indices(spec: FlowSpec, m: int) -> Iterator[Tuple[int, ...]]:
        if m <= 0:
            raise InvalidArgumentError(f"forward ball needs m >= 1, got {m}")

        return itertools.product(range(1, m + 1), repeat=spec.rank)

    @staticmethod
    def forward_ball(
        spec: FlowSpec, m: int, model: ModelParams
    ) -> Iterator[GroupElement]:
        """Lazily enumerates H+_m = {h_k : k in [1, m]^d} lexicographically."""
        for k in Flows.forward_indices(spec, m):
            yield Flows.flow_element(spec, k, model)


class OrbitBatch:
    """Many orbits advanced together on reduced representatives.

    All products are elementwise over samples, so the result for one sample
    does not depend on which other samples share the batch."""

    def __init__(
        self, batch: RepBatch, spec: FlowSpec, renorm_cadence: int = 1024
    ):
        model = batch.lattice.model
        Flows.check_model(spec, model)

        self.batch = batch
        self.spec = spec
        self.renorm_cadence = renorm_cadence
        self.steps = [g.entries for g in Flows.step_elements(spec, model)]
        self.ops = 0

    @staticmethod
    def right_multiply(batch: RepBatch, h: np.ndarray) -> RepBatch:
        (p, q), (r, s) = h

        return RepBatch(
            batch.a * p + batch.b * r,
            batch.a * q + batch.b * s,
            batch.c * p + batch.d * r,
            batch.c * q + batch.d * s,
            batch.lattice)

    @staticmethod
    def renormalize(batch: RepBatch) -> RepBatch:
        det = batch.a * batch.d - batch.b * batch.c
        defect = float(np.max(np.abs(det - 1))) if len(batch) else 0.0

        if not math.isfinite(defect) or defect >= DRIFT_LIMIT:
            raise DriftError(defect)

        scale = np.sqrt(det)

        return RepBatch(
            batch.a / scale, batch.b / scale, batch.c / scale,
            batch.d / scale, batch.lattice)

    def _step(self, batch: RepBatch, axis: int) -> RepBatch:
        moved = self.right_multiply(batch, self.steps[axis])
        self.ops += 1

        if self.ops % self.renorm_cadence == 0:
            moved = self.renormalize(moved)

        return Lattices.reduce_batch(moved)

    def walk(self, m: int) -> Iterator[Tuple[int, RepBatch]]:
        """Yields (k, x g_k) for k = 1..m, rank 1 only."""
        if self.spec.rank != 1:
            raise InvalidArgumentError("walk is defined for rank 1 actions")

        current = self.batch
        for k in range(1, m + 1):
            current = self._step(current, 0)
            yield k, current

    def walk_forward_ball(
        self, m: int
    ) -> Iterator[Tuple[Tuple[int, ...], int, RepBatch]]:
        """Yields (k, |k|_inf, x h_k) over H+_m in row-major order.

        Partial products along leading axes are reused so the traversal costs
        one group operation per element."""
        if m <= 0:
            raise InvalidArgumentError(f"forward ball needs m >= 1, got {m}")

        yield from self._walk_axis(self.batch, 0, (), 0, m)

    def _walk_axis(self, batch, axis, prefix, prefix_max, m):
        current = batch
        last = axis == self.spec.rank - 1

        for k in range(1, m + 1):
            current = self._step(current, axis)
            index = prefix + (k,)
            entry = max(prefix_max, k)

            if last:
                yield index, entry, current
            else:
                yield from self._walk_axis(
                    current.copy(), axis + 1, index, entry, m)
