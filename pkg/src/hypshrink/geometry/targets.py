"""Shrinking target families, their measures and Haar sampling."""

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

import logging
import math

from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from scipy import integrate, optimize, stats

from hypshrink.errors import ConfigurationError, InvalidArgumentError
from hypshrink.geometry.lattice import Lattices
from hypshrink.geometry.types import (
    BALL,
    ConstantSchedule,
    CUSP,
    CUSTOM,
    Lattice,
    LogHeightSchedule,
    MeasureEstimate,
    MeasureSchedule,
    MODULAR,
    PICARD,
    PowerSchedule,
    QuotientPoint,
    RepBatch,
    SamplerStats,
    Schedule,
    SL2C,
    TargetFamily,
)

logger = logging.getLogger(__name__)

DEFAULT_CENTERS = {
    MODULAR: (0.2 + 0j, 1.5),
    PICARD: (0.1 + 0.2j, 1.2),
}
INJECTIVITY_THRESHOLD = 0.3
MIN_ACCEPTANCE = 0.01
EXACT_HIT_TOL = 1e-9


class HaarSampler:
    """Rejection sampler for the Haar probability measure on Gamma \\ G.

    Draws come in fixed blocks; block b uses its own Philox stream keyed by
    (seed, stream, b), so sample i is a function of (seed, stream, i) alone.
    """

    def __init__(
        self,
        lattice: Lattice,
        seed: int,
        stream: int = 0,
        block_size: int = 64,
        proposal_floor: Optional[float] = None,
    ):
        self.lattice = lattice
        self.seed = int(seed)
        self.stream = int(stream)
        self.block_size = block_size
        self.proposal_floor = proposal_floor or lattice.domain_floor
        self.stats = SamplerStats()

    def rng_for(self, block: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream, block))

        return np.random.Generator(np.random.Philox(seq))

    def _propose(self, rng: np.random.Generator, size: int):
        lat = self.lattice
        n = lat.model.n
        u = rng.random((size, 3))
        w = u[:, 0] - 0.5
        if lat.name == PICARD:
            w = w + 0.5j * u[:, 1]

        # Pareto law with density proportional to y^(-n) above the floor
        y = self.proposal_floor * (1 - u[:, 2]) ** (-1 / (n - 1))
        inside = np.abs(w) ** 2 + y * y >= 1

        return w, y, inside

    def _frames(self, rng: np.random.Generator, size: int):
        if self.lattice.model.model == SL2C:
            quat = rng.standard_normal((size, 4))
            quat /= np.linalg.norm(quat, axis=1, keepdims=True)
            alpha = quat[:, 0] + 1j * quat[:, 1]
            beta = quat[:, 2] + 1j * quat[:, 3]

            return alpha, beta, -np.conj(beta), np.conj(alpha)

        theta = 2 * math.pi * rng.random(size)

        return np.cos(theta), np.sin(theta), -np.sin(theta), np.cos(theta)

    def _block(self, block: int):
        rng = self.rng_for(block)
        size = self.block_size
        ws, ys = [], []
        taken = 0

        for _ in range(1000):
            w, y, inside = self._propose(rng, 2 * size)
            self.stats.proposed += 2 * size
            self.stats.accepted += int(inside.sum())
            ws.append(w[inside])
            ys.append(y[inside])
            taken += int(inside.sum())

            if self.stats.proposed >= 1000 and \
                    self.stats.acceptance_rate < MIN_ACCEPTANCE:
                raise ConfigurationError(
                    f"Haar sampler acceptance rate "
                    f"{self.stats.acceptance_rate:.4f} below "
                    f"{MIN_ACCEPTANCE}; raise the proposal floor")

            if taken >= size:
                break
        else:
            raise ConfigurationError("Haar sampler failed to fill a block")

        w = np.concatenate(ws)[:size]
        y = np.concatenate(ys)[:size]
        k11, k12, k21, k22 = self._frames(rng, size)

        return w, y, k11, k12, k21, k22

    def sample_batch(self, count: int, start: int = 0) -> RepBatch:
        """Samples start, ..., start + count - 1 as a reduced batch."""
        if count < 1:
            raise InvalidArgumentError(f"sample count {count} must be >= 1")

        first = start // self.block_size
        last = (start + count - 1) // self.block_size
        parts = [self._block(b) for b in range(first, last + 1)]
        w, y, k11, k12, k21, k22 = (np.concatenate(col) for col in zip(*parts))

        offset = start - first * self.block_size
        window = slice(offset, offset + count)
        w, y = w[window], y[window]
        k11, k12, k21, k22 = k11[window], k12[window], k21[window], k22[window]

        dtype = self.lattice.model.dtype
        sqrt_y = np.sqrt(y)
        a, b, d = sqrt_y, w / sqrt_y, 1 / sqrt_y
        if dtype == np.float64:
            b = b.real

        batch = RepBatch(
            (a * k11 + b * k21).astype(dtype),
            (a * k12 + b * k22).astype(dtype),
            (d * k21).astype(dtype),
            (d * k22).astype(dtype),
            self.lattice)

        return Lattices.reduce_batch(batch)


class Targets:
    """Target families, membership and measures."""

    @staticmethod
    def default_center(lat: Lattice) -> QuotientPoint:
        w, h = DEFAULT_CENTERS[lat.name]

        return Lattices.point_from_base(lat, w, h)

    @staticmethod
    def _check_schedule(kind: str, schedule: Schedule):
        allowed = {
            BALL: (PowerSchedule, ConstantSchedule, MeasureSchedule),
            CUSP: (LogHeightSchedule, ConstantSchedule, MeasureSchedule),
        }
        if not isinstance(schedule, allowed[kind]):
            raise InvalidArgumentError(
                f"{type(schedule).__name__} cannot drive a {kind} family")

        if isinstance(schedule, PowerSchedule) and (
                schedule.exponent < 0 or schedule.coeff <= 0):
            raise InvalidArgumentError("radius schedule must be nonincreasing")

        if isinstance(schedule, LogHeightSchedule) and schedule.slope < 0:
            raise InvalidArgumentError("height schedule must be nondecreasing")

        if isinstance(schedule, MeasureSchedule) and (
                schedule.amplitude <= 0 or schedule.eta < 0
                or not 0 < schedule.cap <= 1):
            raise InvalidArgumentError(
                "measure schedule needs amplitude > 0, eta >= 0, "
                "0 < cap <= 1")

    @staticmethod
    def ball(
        lat: Lattice,
        schedule: Schedule,
        center: Optional[QuotientPoint] = None,
    ) -> TargetFamily:
        Targets._check_schedule(BALL, schedule)
        center = center or Targets.default_center(lat)
        images = Lattices.point_images(lat, center.horizontal, center.height)

        return TargetFamily(
            kind=BALL, lattice=lat, schedule=schedule, center=center,
            center_images=images)

    @staticmethod
    def cusp(lat: Lattice, schedule: Schedule) -> TargetFamily:
        Targets._check_schedule(CUSP, schedule)

        return TargetFamily(kind=CUSP, lattice=lat, schedule=schedule)

    @staticmethod
    def custom(
        lat: Lattice,
        membership: Callable[[QuotientPoint, int], bool],
        measure_schedule: Union[Callable[[int], float], str],
    ) -> TargetFamily:
        if measure_schedule != "estimate" and not callable(measure_schedule):
            raise InvalidArgumentError(
                "custom targets declare a measure schedule or 'estimate'")

        return TargetFamily(
            kind=CUSTOM, lattice=lat, membership=membership,
            measure_schedule=measure_schedule)

    @staticmethod
    def schedule_loglaw(
        kind: str,
        epsilon: float,
        n: int,
        sign: int = 1,
        lattice: Optional[Lattice] = None,
        center: Optional[QuotientPoint] = None,
    ) -> TargetFamily:
        """Ball radii m^(-(1 +- eps)/n) or cusp heights (1 +- eps)ln(m)/(n-1)."""
        if not 0 <= epsilon < 1:
            raise InvalidArgumentError(f"epsilon={epsilon} outside [0, 1)")

        if sign not in (1, -1):
            raise InvalidArgumentError("sign must be +1 or -1")

        lat = lattice or Lattices.build(MODULAR if n == 2 else PICARD)
        if lat.model.n != n:
            raise InvalidArgumentError(
                f"lattice {lat.name} lives in dimension {lat.model.n}, not {n}")

        factor = 1 + sign * epsilon
        if kind == BALL:
            return Targets.ball(
                lat, PowerSchedule(1.0, factor / n), center)

        if kind == CUSP:
            return Targets.cusp(lat, LogHeightSchedule(factor / (n - 1), 0.0))

        raise InvalidArgumentError(f"log law schedules exist for ball/cusp, "
                                   f"not {kind}")

    @staticmethod
    def ball_volume(r: float, n: int) -> float:
        """Volume of a hyperbolic ball of radius r in dimension 2 or 3."""
        if n == 2:
            return 4 * math.pi * math.sinh(r / 2) ** 2

        if n == 3:
            return math.pi * (math.sinh(2 * r) - 2 * r)

        raise InvalidArgumentError(
            f"ball volumes implemented for n=2,3, not {n}")

    @staticmethod
    def ball_radius_for_volume(volume: float, n: int) -> float:
        if volume <= 0:
            return 0.0

        if n == 2:
            return 2 * math.asinh(math.sqrt(volume / (4 * math.pi)))

        upper = 1.0
        while Targets.ball_volume(upper, n) < volume:
            upper *= 2

        return optimize.brentq(
            lambda r: Targets.ball_volume(r, n) - volume, 0.0, upper,
            xtol=1e-15, rtol=1e-13)

    @staticmethod
    def cusp_measure(lat: Lattice, height: float) -> float:
        """mu{h >= Y}, closed form above height 1 and quadrature below."""
        n = lat.model.n

        if height >= 1:
            return lat.strip_area * height ** (1 - n) / (
                (n - 1) * lat.covolume)

        if height <= lat.domain_floor:
            return 1.0

        if lat.name == MODULAR:
            val, _ = integrate.quad(
                lambda x: 1 / max(height, math.sqrt(1 - x * x)), -0.5, 0.5,
                points=[-math.sqrt(1 - height ** 2),
                        math.sqrt(1 - height ** 2)])
        else:
            val, _ = integrate.dblquad(
                lambda y, x: 1 / (2 * max(height ** 2, 1 - x * x - y * y)),
                -0.5, 0.5, 0.0, 0.5)

        return min(1.0, val / lat.covolume)

    @staticmethod
    def height_for_measure(lat: Lattice, measure: float) -> float:
        n = lat.model.n
        at_one = Targets.cusp_measure(lat, 1.0)

        if measure <= at_one:
            return (lat.strip_area / ((n - 1) * lat.covolume * measure)) ** (
                1 / (n - 1))

        if measure >= 1:
            return lat.domain_floor

        return optimize.brentq(
            lambda y: Targets.cusp_measure(lat, y) - measure,
            lat.domain_floor, 1.0, xtol=1e-13)

    @staticmethod
    def schedule_value(fam: TargetFamily, m: int) -> float:
        """The radius (ball) or the height Y (cusp) of B_m."""
        schedule = fam.schedule

        if isinstance(schedule, MeasureSchedule):
            measure = schedule.measure(m)
            if fam.kind == BALL:
                return Targets.ball_radius_for_volume(
                    measure * fam.lattice.covolume, fam.lattice.model.n)

            return Targets.height_for_measure(fam.lattice, measure)

        return schedule(m)

    @staticmethod
    def threshold(fam: TargetFamily, m: int) -> float:
        """Oriented threshold: -r(m) for balls, ln Y(m) for cusps.

        Oriented thresholds are nondecreasing in m for nested families."""
        if fam.kind == CUSTOM:
            raise ConfigurationError(
                "custom targets have no threshold; use membership")

        value = Targets.schedule_value(fam, m)

        if fam.kind == BALL:
            return -value

        return math.log(value)

    @staticmethod
    def depth(fam: TargetFamily, batch: RepBatch) -> np.ndarray:
        """Oriented score: minus ball distance, or log height in the cusp."""
        w, h = Lattices.batch_projection(batch)

        if fam.kind == BALL:
            return -Lattices.distance_to_images(w, h, fam.center_images)

        if fam.kind == CUSP:
            return np.log(h)

        raise ConfigurationError("custom targets have no depth score")

    @staticmethod
    def hit(fam: TargetFamily, depth, threshold):
        """Membership in oriented terms: strict for balls, closed for cusps."""
        if fam.kind == BALL:
            return np.asarray(depth) > threshold

        return np.asarray(depth) >= threshold

    @staticmethod
    def hit_prefix(
        fam: TargetFamily, depth: np.ndarray, thresholds: np.ndarray
    ) -> np.ndarray:
        """Number of leading grid thresholds each depth satisfies."""
        side = "left" if fam.kind == BALL else "right"

        return np.searchsorted(thresholds, depth, side=side)

    @staticmethod
    def membership(fam: TargetFamily, p: QuotientPoint, m: int) -> bool:
        if fam.kind == CUSTOM:
            return bool(fam.membership(p, m))

        if fam.kind == BALL:
            dist = Lattices.quotient_distance(p, fam.center)

            return dist < Targets.schedule_value(fam, m)

        return Lattices.cusp_height(p) >= Targets.threshold(fam, m)

    @staticmethod
    def batch_membership(
        fam: TargetFamily, batch: RepBatch, m: int
    ) -> np.ndarray:
        if fam.kind == CUSTOM:
            return np.array([
                bool(fam.membership(p, m)) for p in Lattices.batch_points(batch)
            ], dtype=bool)

        return Targets.hit(fam, Targets.depth(fam, batch),
                           Targets.threshold(fam, m))

    @staticmethod
    def center_injectivity(fam: TargetFamily) -> float:
        return Lattices.injectivity_radius(
            fam.lattice, fam.center.horizontal, fam.center.height)

    @staticmethod
    def exact_measure(
        fam: TargetFamily,
        m: int,
        injectivity_threshold: float = INJECTIVITY_THRESHOLD,
    ) -> Optional[float]:
        """The exact measure of B_m, or None when only an estimate exists."""
        lat = fam.lattice

        if fam.kind == CUSTOM:
            if callable(fam.measure_schedule):
                return float(fam.measure_schedule(m))

            return None

        if fam.kind == CUSP:
            if isinstance(fam.schedule, MeasureSchedule):
                return fam.schedule.measure(m)

            return Targets.cusp_measure(lat, Targets.schedule_value(fam, m))

        radius = Targets.schedule_value(fam, m)
        limit = min(injectivity_threshold, Targets.center_injectivity(fam))
        if radius > limit:
            return None

        if isinstance(fam.schedule, MeasureSchedule):
            return fam.schedule.measure(m)

        return Targets.ball_volume(radius, lat.model.n) / lat.covolume

    @staticmethod
    def estimate_measure(
        fam: TargetFamily, m: int, sampler: HaarSampler, count: int
    ) -> MeasureEstimate:
        batch = sampler.sample_batch(count)
        inside = Targets.batch_membership(fam, batch, m)
        p_hat = float(inside.mean())

        return MeasureEstimate(
            p_hat, math.sqrt(max(p_hat * (1 - p_hat), 0.0) / count), False)

    @staticmethod
    def measure(
        fam: TargetFamily,
        m: int,
        sampler: Optional[HaarSampler] = None,
        count: int = 100000,
        injectivity_threshold: float = INJECTIVITY_THRESHOLD,
    ) -> MeasureEstimate:
        """mu(B_m), exact where a closed form applies, else Monte Carlo."""
        exact = Targets.exact_measure(fam, m, injectivity_threshold)
        if exact is not None:
            return MeasureEstimate(exact)

        if sampler is None:
            raise ConfigurationError(
                f"{fam.kind} target at m={m} needs a Monte Carlo estimate "
                f"but no sampler was given")

        logger.debug("estimating mu(B_%d) from %d samples", m, count)

        return Targets.estimate_measure(fam, m, sampler, count)

    @staticmethod
    def measure_series(
        fam: TargetFamily,
        ms: Sequence[int],
        sampler: Optional[HaarSampler] = None,
        count: int = 100000,
        injectivity_threshold: float = INJECTIVITY_THRESHOLD,
    ) -> np.ndarray:
        """mu(B_m) for many m at once.

        Closed forms are vectorized; values needing Monte Carlo are estimated
        once per distinct radius or height."""
        ms = np.asarray(ms, dtype=np.float64)
        lat = fam.lattice
        schedule = fam.schedule

        if isinstance(schedule, MeasureSchedule):
            return np.minimum(schedule.cap, schedule.amplitude * ms ** (
                -schedule.eta))

        if fam.kind == CUSTOM:
            return np.array([
                Targets.measure(fam, int(m), sampler, count,
                                injectivity_threshold).value for m in ms])

        if isinstance(schedule, PowerSchedule):
            values = schedule.coeff * ms ** (-schedule.exponent)
        elif isinstance(schedule, LogHeightSchedule):
            values = np.exp(schedule.slope * np.log(ms) + schedule.offset)
        else:
            values = np.full(ms.shape, schedule.value)

        out = np.empty(ms.shape)
        n = lat.model.n

        if fam.kind == CUSP:
            high = values >= 1
            out[high] = lat.strip_area * values[high] ** (1 - n) / (
                (n - 1) * lat.covolume)
            cache = {}
            for idx in np.flatnonzero(~high):
                key = float(values[idx])
                if key not in cache:
                    cache[key] = Targets.cusp_measure(lat, key)
                out[idx] = cache[key]

            return out

        limit = min(injectivity_threshold, Targets.center_injectivity(fam))
        small = values <= limit
        r = values[small]
        if n == 2:
            out[small] = 4 * math.pi * np.sinh(r / 2) ** 2 / lat.covolume
        else:
            out[small] = math.pi * (np.sinh(2 * r) - 2 * r) / lat.covolume

        cache = {}
        for idx in np.flatnonzero(~small):
            key = float(values[idx])
            if key not in cache:
                if sampler is None:
                    raise ConfigurationError(
                        f"ball radius {key:.4f} exceeds the injectivity "
                        f"limit {limit:.4f}; a sampler is needed")
                frozen = Targets.ball(lat, ConstantSchedule(key), fam.center)
                cache[key] = Targets.estimate_measure(
                    frozen, 1, sampler, count).value
            out[idx] = cache[key]

        return out

    @staticmethod
    def haar_sample(sampler: HaarSampler, count: int) -> List[QuotientPoint]:
        return Lattices.batch_points(sampler.sample_batch(count))

    @staticmethod
    def height_goodness_of_fit(heights: np.ndarray, n: int) -> float:
        """KS p-value of heights above 1 against Pareto(n - 1)."""
        upper = np.asarray(heights)[np.asarray(heights) >= 1]

        return float(stats.kstest(upper, "pareto", args=(n - 1,)).pvalue)
