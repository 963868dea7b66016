"""Streaming shrinking target estimators over batched orbits."""

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

import bisect
import logging

from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from hypshrink.errors import ConfigurationError, InvalidArgumentError
from hypshrink.geometry.flows import OrbitBatch
from hypshrink.geometry.lattice import Lattices
from hypshrink.geometry.targets import EXACT_HIT_TOL, Targets
from hypshrink.geometry.types import (
    BALL,
    CUSP,
    CUSTOM,
    FlowSpec,
    HitRecord,
    QuotientPoint,
    RepBatch,
    TargetFamily,
)

logger = logging.getLogger(__name__)

Observable = Union[TargetFamily, Callable[[RepBatch], np.ndarray]]


class StepView:
    """One orbit step for a whole batch, with lazily cached geometry."""

    def __init__(self, entry: int, reps: RepBatch):
        self.entry = entry
        self.reps = reps
        self._projection = None
        self._distance: Dict[int, np.ndarray] = {}

    @property
    def projection(self):
        if self._projection is None:
            self._projection = Lattices.batch_projection(self.reps)

        return self._projection

    @property
    def log_height(self) -> np.ndarray:
        return np.log(self.projection[1])

    def distance(self, fam: TargetFamily) -> np.ndarray:
        key = id(fam.center_images)
        if key not in self._distance:
            w, h = self.projection
            self._distance[key] = Lattices.distance_to_images(
                w, h, fam.center_images)

        return self._distance[key]

    def depth(self, fam: TargetFamily) -> np.ndarray:
        if fam.kind == BALL:
            return -self.distance(fam)

        if fam.kind == CUSP:
            return self.log_height

        raise ConfigurationError(
            "custom targets cannot be tracked by depth; this estimator "
            "needs a ball or cusp family")

    def membership(self, fam: TargetFamily, m: int) -> np.ndarray:
        if fam.kind == CUSTOM:
            return Targets.batch_membership(fam, self.reps, m)

        return Targets.hit(fam, self.depth(fam), Targets.threshold(fam, m))


class OrbitObserver:
    """Receives every step of an orbit walk and accumulates a statistic."""

    def __init__(self, size: int):
        self.size = size

    def observe(self, view: StepView):
        raise NotImplementedError

    def finish(self):
        """Hook run once after the walk ends."""

    def result(self) -> Dict[str, object]:
        raise NotImplementedError


class GridObserver(OrbitObserver):
    """Observer whose output lives on an increasing grid of m values.

    A point with entry index e belongs to H+_m for every grid value m >= e;
    slot(e) is the first such grid index."""

    def __init__(self, size: int, m_grid: Sequence[int]):
        super().__init__(size)
        self.grid = [int(m) for m in m_grid]

        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise InvalidArgumentError("m grid must be strictly increasing")

        if not self.grid or self.grid[0] < 1:
            raise InvalidArgumentError("m grid must start at m >= 1")

    def slot(self, entry: int) -> int:
        return bisect.bisect_left(self.grid, entry)


class ExtremaObserver(GridObserver):
    """Running closest approach to a centre and deepest cusp excursion."""

    def __init__(
        self,
        size: int,
        m_grid: Sequence[int],
        center: Optional[TargetFamily] = None,
        puncture: bool = False,
    ):
        super().__init__(size, m_grid)
        self.center = center
        self.puncture = puncture
        self.ball = np.full((size, len(self.grid)), np.inf)
        self.cusp = np.full((size, len(self.grid)), -np.inf)
        self.flagged = np.zeros(size, dtype=bool)

    def observe(self, view: StepView):
        j = self.slot(view.entry)
        if j >= len(self.grid):
            return

        np.maximum(self.cusp[:, j], view.log_height, out=self.cusp[:, j])

        if self.center is not None:
            dist = view.distance(self.center)
            if self.puncture:
                exact = dist < EXACT_HIT_TOL
                self.flagged |= exact
                dist = np.where(exact, np.inf, dist)

            np.minimum(self.ball[:, j], dist, out=self.ball[:, j])

    def result(self):
        out = {"d_cusp": np.maximum.accumulate(self.cusp, axis=1)}

        if self.center is not None:
            out["d_ball"] = np.minimum.accumulate(self.ball, axis=1)
            out["flagged"] = self.flagged

        return out


class FrozenCountObserver(GridObserver):
    """#{h in H+_m : xh in B_m} for every grid value m, in one walk.

    Nesting makes the set of grid targets hit by a point a prefix, so each
    point adds one to a contiguous range of grid slots."""

    def __init__(self, size: int, m_grid: Sequence[int], fam: TargetFamily):
        super().__init__(size, m_grid)
        self.fam = fam
        self.diff = np.zeros((size, len(self.grid) + 1), dtype=np.int64)
        self.thresholds = None

        if fam.kind != CUSTOM:
            self.thresholds = np.array(
                [Targets.threshold(fam, m) for m in self.grid])

    def _custom_prefix(self, view: StepView, start: int) -> np.ndarray:
        prefix = np.full(self.size, start, dtype=np.int64)
        points = Lattices.batch_points(view.reps)

        for idx, point in enumerate(points):
            level = start
            while level < len(self.grid) and self.fam.membership(
                    point, self.grid[level]):
                level += 1
            prefix[idx] = level

        return prefix

    def observe(self, view: StepView):
        j = self.slot(view.entry)
        if j >= len(self.grid):
            return

        if self.thresholds is None:
            prefix = self._custom_prefix(view, j)
        else:
            prefix = Targets.hit_prefix(
                self.fam, view.depth(self.fam), self.thresholds)

        adds = prefix > j
        self.diff[:, j] += adds
        rows = np.flatnonzero(adds)
        self.diff[rows, prefix[rows]] -= 1

    def result(self):
        return {"frozen": np.cumsum(self.diff[:, :-1], axis=1)}


class DiagonalObserver(OrbitObserver):
    """#{m <= M : x g_m in B_m} at checkpoints M, for rank 1 orbits."""

    def __init__(self, size: int, fam: TargetFamily, checkpoints: Sequence[int]):
        super().__init__(size)
        self.fam = fam
        self.checkpoints = sorted(set(int(m) for m in checkpoints))
        self.wanted = set(self.checkpoints)
        self.count = np.zeros(size, dtype=np.int64)
        self.recorded: Dict[int, np.ndarray] = {}

    def observe(self, view: StepView):
        m = view.entry
        if m > self.checkpoints[-1]:
            return

        self.count += view.membership(self.fam, m)
        if m in self.wanted:
            self.recorded[m] = self.count.copy()

    def counts_at(self, m: int) -> np.ndarray:
        if m == 0:
            return np.zeros(self.size, dtype=np.int64)

        return self.recorded[m]

    def result(self):
        return {"diag_" + str(m): self.recorded[m] for m in self.checkpoints}


class FirstHitObserver(OrbitObserver):
    """First entry index at which the orbit enters each target of a grid."""

    def __init__(
        self,
        size: int,
        kind: str,
        levels: Sequence[float],
        center: Optional[TargetFamily] = None,
        name: str = "tau",
    ):
        super().__init__(size)
        if kind == BALL and center is None:
            raise InvalidArgumentError("ball hitting times need a centre")

        self.kind = kind
        self.levels = np.asarray(levels, dtype=np.float64)
        self.center = center
        self.name = name
        self.tau = np.full((size, len(self.levels)), np.inf)

    def observe(self, view: StepView):
        if self.kind == BALL:
            hit = view.distance(self.center)[:, None] < self.levels[None, :]
        else:
            hit = view.log_height[:, None] >= self.levels[None, :]

        np.copyto(self.tau, np.minimum(self.tau, view.entry), where=hit)

    def result(self):
        return {self.name: self.tau}


class LevelCountObserver(OrbitObserver):
    """Visits below a fixed ball radius and above a fixed log height."""

    def __init__(
        self,
        size: int,
        center: TargetFamily,
        radius: float,
        log_height: float,
    ):
        super().__init__(size)
        self.center = center
        self.radius = radius
        self.log_height = log_height
        self.ball = np.zeros(size, dtype=np.int64)
        self.cusp = np.zeros(size, dtype=np.int64)

    def observe(self, view: StepView):
        self.ball += view.distance(self.center) < self.radius
        self.cusp += view.log_height >= self.log_height

    def result(self):
        return {"ball_count": self.ball, "cusp_count": self.cusp}


class AverageObserver(GridObserver):
    """Sums of f over H+_m, turned into forward ball averages."""

    def __init__(
        self,
        size: int,
        m_grid: Sequence[int],
        f: Observable,
        rank: int,
        m_eval: int = 1,
    ):
        super().__init__(size, m_grid)
        self.f = f
        self.rank = rank
        self.m_eval = m_eval
        self.sums = np.zeros((size, len(self.grid)))

    def observe(self, view: StepView):
        j = self.slot(view.entry)
        if j >= len(self.grid):
            return

        if isinstance(self.f, TargetFamily):
            values = view.membership(self.f, self.m_eval)
        else:
            values = self.f(view.reps)

        self.sums[:, j] += values

    def result(self):
        counts = np.array(self.grid, dtype=np.float64) ** self.rank

        return {"beta": np.cumsum(self.sums, axis=1) / counts[None, :]}


class AlwaysHitObserver(OrbitObserver):
    """Checks xH+_m meets B_m for every m in [m_lo, m_hi].

    Also records window certificates: whether H+_{2^(j-1)} misses
    B_{2^j} for each dyadic 2^j <= m_hi."""

    def __init__(
        self,
        size: int,
        fam: TargetFamily,
        m_lo: int,
        m_hi: int,
        rank: int,
    ):
        super().__init__(size)
        if not 1 <= m_lo < m_hi:
            raise InvalidArgumentError(
                f"always hitting window needs 1 <= M_lo < M_hi, got "
                f"[{m_lo}, {m_hi}]")

        if fam.kind == CUSTOM:
            raise ConfigurationError(
                "always hitting checks need a ball or cusp family")

        self.fam = fam
        self.m_lo = m_lo
        self.m_hi = m_hi
        self.rank = rank
        self.first_miss = np.zeros(size, dtype=np.int64)

        self.exponents = []
        j = 1
        while 2 ** j <= m_hi:
            self.exponents.append(j)
            j += 1

        self.cert_at = {2 ** (j - 1): idx for idx, j in
                        enumerate(self.exponents)}
        self.cert_miss = np.zeros((size, len(self.exponents)), dtype=bool)

        self.best = np.full(size, -np.inf)
        self.by_entry = None
        if rank > 1:
            self.by_entry = np.full((size, m_hi + 1), -np.inf)

    def _check(self, m: int, best: np.ndarray):
        if self.m_lo <= m <= self.m_hi:
            miss = ~Targets.hit(self.fam, best, Targets.threshold(self.fam, m))
            self.first_miss[(self.first_miss == 0) & miss] = m

        if m in self.cert_at:
            idx = self.cert_at[m]
            target = 2 ** self.exponents[idx]
            self.cert_miss[:, idx] = ~Targets.hit(
                self.fam, best, Targets.threshold(self.fam, target))

    def observe(self, view: StepView):
        depth = view.depth(self.fam)

        if self.by_entry is None:
            np.maximum(self.best, depth, out=self.best)
            self._check(view.entry, self.best)
        else:
            col = self.by_entry[:, view.entry]
            np.maximum(col, depth, out=col)
            self.by_entry[:, view.entry] = col

    def finish(self):
        if self.by_entry is None:
            return

        running = np.maximum.accumulate(self.by_entry, axis=1)
        for m in range(1, self.m_hi + 1):
            self._check(m, running[:, m])

    def result(self):
        return {
            "first_miss": self.first_miss,
            "always_hit": self.first_miss == 0,
            "cert_miss": self.cert_miss,
        }


class WindowHitObserver(OrbitObserver):
    """Hit times m in [M, N] of x g_m in B_m and the running sum S_M."""

    def __init__(
        self,
        size: int,
        fam: TargetFamily,
        window_start: int,
        window_end: int,
        horizon: int,
    ):
        super().__init__(size)
        self.fam = fam
        self.start = window_start
        self.end = window_end
        self.horizon = horizon
        self.hits: List[List[int]] = [[] for _ in range(size)]
        self.s_m = np.zeros(size, dtype=np.int64)

    def observe(self, view: StepView):
        m = view.entry
        if m > max(self.end, self.horizon):
            return

        hit = view.membership(self.fam, m)

        if m <= self.horizon:
            self.s_m += hit

        if self.start <= m <= self.end:
            for row in np.flatnonzero(hit):
                self.hits[row].append(m - self.start)

    def result(self):
        return {
            "window_hits": [np.array(h, dtype=np.int64) for h in self.hits],
            "s_m": self.s_m,
        }


class Estimators:
    """Per-sample estimators. Every kernel takes a RepBatch first so that it
    can run on one chunk of samples inside a worker process."""

    @staticmethod
    def as_batch(x: Union[QuotientPoint, RepBatch]) -> RepBatch:
        if isinstance(x, RepBatch):
            return x

        return Lattices.batch_from_elements([x.rep], x.lattice)

    @staticmethod
    def walk(
        batch: RepBatch,
        spec: FlowSpec,
        m_max: int,
        observers: List[OrbitObserver],
        renorm_cadence: int = 1024,
    ) -> Dict[str, object]:
        """One pass over H+_{m_max} feeding every observer."""
        orbit = OrbitBatch(batch, spec, renorm_cadence)

        for _, entry, reps in orbit.walk_forward_ball(m_max):
            view = StepView(entry, reps)
            for observer in observers:
                observer.observe(view)

        out: Dict[str, object] = {}
        for observer in observers:
            observer.finish()
            out.update(observer.result())

        return out

    @staticmethod
    def _require_rank_one(spec: FlowSpec, what: str):
        if spec.rank != 1:
            raise ConfigurationError(f"{what} is defined for rank 1 flows")

    @staticmethod
    def depth_kernel(
        batch: RepBatch,
        spec: FlowSpec,
        m_grid: Sequence[int],
        center: Optional[TargetFamily] = None,
        renorm_cadence: int = 1024,
    ) -> Dict[str, object]:
        observer = ExtremaObserver(len(batch), m_grid, center)

        return Estimators.walk(
            batch, spec, m_grid[-1], [observer], renorm_cadence)

    @staticmethod
    def penetration_depths(
        x: Union[QuotientPoint, RepBatch],
        spec: FlowSpec,
        m_grid: Sequence[int],
        center: TargetFamily,
        renorm_cadence: int = 1024,
    ):
        """(d_m(x, x0), d_m(x, infinity)) along the grid.

        The ball depth is the running minimum distance to the centre of the
        given family; the cusp depth is the running maximum log height."""
        out = Estimators.depth_kernel(
            Estimators.as_batch(x), spec, m_grid, center, renorm_cadence)

        return out["d_ball"], out["d_cusp"]

    @staticmethod
    def hits_kernel(
        batch: RepBatch,
        spec: FlowSpec,
        fam: TargetFamily,
        m_grid: Sequence[int],
        center: Optional[TargetFamily] = None,
        renorm_cadence: int = 1024,
    ) -> Dict[str, object]:
        size = len(batch)
        observers: List[OrbitObserver] = [
            FrozenCountObserver(size, m_grid, fam),
            ExtremaObserver(size, m_grid, center),
        ]

        diagonal = None
        if spec.rank == 1 and fam.kind != CUSTOM:
            checkpoints = list(m_grid) + [m // 2 for m in m_grid if m > 1]
            diagonal = DiagonalObserver(size, fam, checkpoints)
            observers.append(diagonal)

        out = Estimators.walk(
            batch, spec, m_grid[-1], observers, renorm_cadence)

        if diagonal is not None:
            out["diag"] = np.stack(
                [diagonal.counts_at(m) for m in m_grid], axis=1)
            out["late"] = out["diag"] - np.stack(
                [diagonal.counts_at(m // 2) for m in m_grid], axis=1)

        return {k: v for k, v in out.items() if not k.startswith("diag_")}

    @staticmethod
    def hit_counts(
        x: Union[QuotientPoint, RepBatch],
        spec: FlowSpec,
        fam: TargetFamily,
        m_grid: Sequence[int],
        renorm_cadence: int = 1024,
        sample_ids: Optional[Sequence[int]] = None,
    ) -> List[HitRecord]:
        """Frozen and diagonal hit counts with penetration depths."""
        batch = Estimators.as_batch(x)
        center = fam if fam.kind == BALL else None
        out = Estimators.hits_kernel(
            batch, spec, fam, m_grid, center, renorm_cadence)

        return Estimators.hit_records(out, m_grid, sample_ids)

    @staticmethod
    def hit_records(
        out: Dict[str, object],
        m_grid: Sequence[int],
        sample_ids: Optional[Sequence[int]] = None,
    ) -> List[HitRecord]:
        frozen = out["frozen"]
        sample_ids = sample_ids if sample_ids is not None else range(
            len(frozen))
        records = []

        for row, sample_id in enumerate(sample_ids):
            record = HitRecord(
                sample_id=int(sample_id),
                m_grid=list(m_grid),
                hit_count_frozen=frozen[row],
                d_cusp=out["d_cusp"][row],
            )
            if "diag" in out:
                record.hit_count_diag = out["diag"][row]
                record.late_diag_hits = out["late"][row]

            if "d_ball" in out:
                record.d_ball = out["d_ball"][row]

            records.append(record)

        return records

    @staticmethod
    def tau_kernel(
        batch: RepBatch,
        spec: FlowSpec,
        kind: str,
        levels: Sequence[float],
        horizon: int,
        center: Optional[TargetFamily] = None,
        renorm_cadence: int = 1024,
    ) -> Dict[str, object]:
        observer = FirstHitObserver(len(batch), kind, levels, center)

        return Estimators.walk(
            batch, spec, horizon, [observer], renorm_cadence)

    @staticmethod
    def hitting_times(
        x: Union[QuotientPoint, RepBatch],
        spec: FlowSpec,
        target_kind: str,
        r_grid: Sequence[float],
        horizon: int,
        center: Optional[TargetFamily] = None,
        renorm_cadence: int = 1024,
    ) -> np.ndarray:
        """First hitting times tau_r; infinity when the horizon runs out.

        Ball levels are radii around the centre; cusp levels are log heights.
        """
        levels = np.asarray(r_grid, dtype=np.float64)
        diffs = np.diff(levels)
        if levels.size > 1 and not (np.all(diffs <= 0) or np.all(diffs >= 0)):
            raise InvalidArgumentError("r grid must be monotone")

        out = Estimators.tau_kernel(
            Estimators.as_batch(x), spec, target_kind, levels, horizon,
            center, renorm_cadence)

        return out["tau"]

    @staticmethod
    def beta_kernel(
        batch: RepBatch,
        spec: FlowSpec,
        f: Observable,
        m_grid: Sequence[int],
        m_eval: int = 1,
        renorm_cadence: int = 1024,
    ) -> Dict[str, object]:
        observer = AverageObserver(len(batch), m_grid, f, spec.rank, m_eval)

        return Estimators.walk(
            batch, spec, m_grid[-1], [observer], renorm_cadence)

    @staticmethod
    def beta_plus(
        f: Observable,
        x: Union[QuotientPoint, RepBatch],
        spec: FlowSpec,
        m: int,
        renorm_cadence: int = 1024,
    ) -> np.ndarray:
        """Forward ball average of f, or of the indicator of B_m."""
        if m < 1:
            raise InvalidArgumentError(f"beta_plus needs m >= 1, got {m}")

        out = Estimators.beta_kernel(
            Estimators.as_batch(x), spec, f, [m], m, renorm_cadence)

        return out["beta"][:, 0]

    @staticmethod
    def always_hit_kernel(
        batch: RepBatch,
        spec: FlowSpec,
        fam: TargetFamily,
        m_lo: int,
        m_hi: int,
        renorm_cadence: int = 1024,
    ) -> Dict[str, object]:
        observer = AlwaysHitObserver(len(batch), fam, m_lo, m_hi, spec.rank)

        return Estimators.walk(batch, spec, m_hi, [observer], renorm_cadence)

    @staticmethod
    def window_kernel(
        batch: RepBatch,
        spec: FlowSpec,
        fam: TargetFamily,
        window_start: int,
        window_end: int,
        horizon: int,
        renorm_cadence: int = 1024,
    ) -> Dict[str, object]:
        Estimators._require_rank_one(spec, "quasi-independence")
        observer = WindowHitObserver(
            len(batch), fam, window_start, window_end, horizon)

        return Estimators.walk(
            batch, spec, max(window_end, horizon), [observer], renorm_cadence)

    @staticmethod
    def loglaw_kernel(
        batch: RepBatch,
        spec: FlowSpec,
        center: TargetFamily,
        m_grid: Sequence[int],
        ball_level: float,
        cusp_level: float,
        r_grid: Sequence[float],
        depth_grid: Sequence[float],
        renorm_cadence: int = 1024,
    ) -> Dict[str, object]:
        size = len(batch)
        observers = [
            ExtremaObserver(size, m_grid, center, puncture=True),
            LevelCountObserver(size, center, ball_level, cusp_level),
            FirstHitObserver(size, BALL, r_grid, center, "tau_ball"),
            FirstHitObserver(size, CUSP, depth_grid, None, "tau_cusp"),
        ]

        return Estimators.walk(
            batch, spec, m_grid[-1], observers, renorm_cadence)

    @staticmethod
    def orbit_kernel(
        batch: RepBatch,
        spec: FlowSpec,
        m_grid: Sequence[int],
        renorm_cadence: int = 1024,
    ) -> Dict[str, object]:
        """Reduced base positions of x g_m at the grid values."""
        Estimators._require_rank_one(spec, "orbit recording")
        wanted = {m: j for j, m in enumerate(m_grid)}
        size = len(batch)
        w_out = np.zeros((size, len(m_grid)), dtype=np.complex128)
        h_out = np.zeros((size, len(m_grid)))

        orbit = OrbitBatch(batch, spec, renorm_cadence)
        for m, reps in orbit.walk(m_grid[-1]):
            if m in wanted:
                w, h = Lattices.batch_projection(reps)
                w_out[:, wanted[m]] = w
                h_out[:, wanted[m]] = h

        return {"w": w_out, "h": h_out}
