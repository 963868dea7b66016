"""Tests for target families, measures and the Haar sampler."""

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


import math

import numpy as np
import pytest

from hypshrink.errors import ConfigurationError, InvalidArgumentError
from hypshrink.geometry.flows import OrbitBatch
from hypshrink.geometry.group_core import GroupCore
from hypshrink.geometry.lattice import Lattices
from hypshrink.geometry.targets import HaarSampler, Targets
from hypshrink.geometry.types import (
    BALL,
    ConstantSchedule,
    CUSP,
    LogHeightSchedule,
    MeasureSchedule,
    PowerSchedule,
)


def test_cusp_measure_closed_form(modular):
    fam = Targets.cusp(modular, ConstantSchedule(2.0))

    assert Targets.measure(fam, 1).value == pytest.approx(
        3 / (2 * math.pi), rel=1e-10)


def test_cusp_measure_is_one_below_the_floor(modular):
    assert Targets.cusp_measure(modular, 0.5) == 1.0


def test_cusp_measure_is_continuous_at_height_one(modular, picard):
    for lat in (modular, picard):
        above = Targets.cusp_measure(lat, 1.0)
        below = Targets.cusp_measure(lat, 1.0 - 1e-9)

        assert below == pytest.approx(above, rel=1e-6)


def test_small_ball_measure(modular):
    fam = Targets.ball(modular, ConstantSchedule(0.1))
    estimate = Targets.measure(fam, 1)

    assert estimate.exact
    assert estimate.value == pytest.approx(0.0300, abs=5e-5)


def test_ball_measure_shrinks_to_zero(modular):
    fam = Targets.ball(modular, PowerSchedule(0.1, 1.0))

    assert Targets.measure(fam, 10 ** 6).value < 1e-12


def test_measure_schedule_round_trip(modular, picard):
    for lat in (modular, picard):
        ball = Targets.ball(lat, MeasureSchedule(0.01, 1.0, 0.01))
        cusp = Targets.cusp(lat, MeasureSchedule(0.3, 0.5, 0.3))

        radius = Targets.schedule_value(ball, 4)
        height = Targets.schedule_value(cusp, 4)

        assert Targets.ball_volume(radius, lat.model.n) / lat.covolume == \
            pytest.approx(0.0025, rel=1e-9)
        assert Targets.cusp_measure(lat, height) == pytest.approx(
            0.15, rel=1e-6)


def test_schedule_loglaw_exponents(modular):
    ball = Targets.schedule_loglaw(BALL, 0.2, 2, 1, modular)
    cusp = Targets.schedule_loglaw(CUSP, 0.2, 2, -1, modular)

    assert ball.schedule.exponent == pytest.approx(0.6)
    assert cusp.schedule.slope == pytest.approx(0.8)


def test_schedule_loglaw_rejects_epsilon():
    with pytest.raises(InvalidArgumentError):
        Targets.schedule_loglaw(BALL, 1.0, 2)


def test_schedule_loglaw_rejects_dimension_mismatch(modular):
    with pytest.raises(InvalidArgumentError):
        Targets.schedule_loglaw(CUSP, 0.1, 3, 1, modular)


def test_growing_radius_is_rejected(modular):
    with pytest.raises(InvalidArgumentError):
        Targets.ball(modular, PowerSchedule(0.1, -1.0))


def test_custom_estimate_needs_sampler(modular):
    fam = Targets.custom(modular, lambda p, m: p.height > 2, "estimate")

    with pytest.raises(ConfigurationError):
        Targets.measure(fam, 1)


def test_custom_estimate_matches_cusp(modular):
    fam = Targets.custom(modular, lambda p, m: p.height >= 2, "estimate")
    sampler = HaarSampler(modular, seed=4)
    estimate = Targets.measure(fam, 1, sampler, count=4000)

    assert not estimate.exact
    assert abs(estimate.value - 3 / (2 * math.pi)) < 5 * estimate.stderr


def test_hit_is_strict_for_balls_and_closed_for_cusps(modular):
    ball = Targets.ball(modular, ConstantSchedule(0.1))
    cusp = Targets.cusp(modular, ConstantSchedule(2.0))

    assert not Targets.hit(ball, -0.1, -0.1)
    assert Targets.hit(cusp, math.log(2.0), math.log(2.0))


def test_membership_of_centre(modular):
    fam = Targets.ball(modular, PowerSchedule(0.1, 0.5))

    assert Targets.membership(fam, fam.center, 10 ** 4)


def test_measure_series_matches_measure(modular):
    families = [
        Targets.ball(modular, PowerSchedule(0.2, 0.5)),
        Targets.cusp(modular, LogHeightSchedule(0.5, 0.0)),
        Targets.cusp(modular, MeasureSchedule(0.5, 1.0, 0.5)),
    ]
    ms = [1, 2, 5, 17, 100]

    for fam in families:
        series = Targets.measure_series(fam, ms)
        single = [Targets.measure(fam, m).value for m in ms]

        assert np.allclose(series, single, rtol=1e-9)


def test_measure_series_large_ball_needs_sampler(modular):
    fam = Targets.ball(modular, ConstantSchedule(1.0))

    with pytest.raises(ConfigurationError):
        Targets.measure_series(fam, [1, 2])


def test_sampler_is_deterministic(modular):
    first = HaarSampler(modular, seed=123).sample_batch(40)
    second = HaarSampler(modular, seed=123).sample_batch(40)
    other = HaarSampler(modular, seed=124).sample_batch(40)

    assert np.array_equal(first.a, second.a)
    assert np.array_equal(first.d, second.d)
    assert not np.array_equal(first.a, other.a)


def test_sampler_window_matches_full_draw(modular):
    sampler = HaarSampler(modular, seed=5, block_size=16)
    full = sampler.sample_batch(50)
    window = HaarSampler(modular, seed=5, block_size=16).sample_batch(
        20, start=20)

    assert np.array_equal(full.a[20:40], window.a)
    assert np.array_equal(full.c[20:40], window.c)


def test_sampler_streams_differ(modular):
    main = HaarSampler(modular, seed=5).sample_batch(10)
    measure = HaarSampler(modular, seed=5, stream=1).sample_batch(10)

    assert not np.array_equal(main.a, measure.a)


def test_sampler_height_marginal(modular):
    batch = HaarSampler(modular, seed=8).sample_batch(2000)
    _, h = Lattices.batch_projection(batch)

    assert np.mean(h >= 2.0) == pytest.approx(3 / (2 * math.pi), abs=0.04)
    assert Targets.height_goodness_of_fit(h, 2) > 1e-3


@pytest.mark.parametrize("fam_kind", [BALL, CUSP])
def test_targets_are_nested(modular, fam_kind):
    if fam_kind == BALL:
        fam = Targets.ball(modular, PowerSchedule(2.0, 0.5))
    else:
        fam = Targets.cusp(modular, LogHeightSchedule(0.5, 0.0))
    batch = HaarSampler(modular, seed=3).sample_batch(256)

    previous = Targets.batch_membership(fam, batch, 1)
    assert previous.any()
    for m in range(2, 200):
        current = Targets.batch_membership(fam, batch, m)

        assert not np.any(current & ~previous)
        previous = current


def test_ball_membership_ignores_the_frame(modular):
    fam = Targets.ball(modular, PowerSchedule(1.0, 0.5))
    batch = HaarSampler(modular, seed=5).sample_batch(256)
    rng = np.random.default_rng(5)

    for _ in range(5):
        frame = GroupCore.make_rotation(
            [rng.uniform(0, 2 * math.pi)], modular.model)
        turned = Lattices.reduce_batch(
            OrbitBatch.right_multiply(batch.copy(), frame.entries))

        assert np.allclose(Targets.depth(fam, turned),
                           Targets.depth(fam, batch), atol=1e-9)
        for m in (1, 4, 16):
            assert np.array_equal(
                Targets.batch_membership(fam, turned, m),
                Targets.batch_membership(fam, batch, m))


@pytest.mark.parametrize("n, unit_volume", [(2, math.pi),
                                            (3, 4 * math.pi / 3)])
def test_ball_volume_scales_like_euclidean(n, unit_volume):
    ratios = [Targets.ball_volume(r, n) / r ** n
              for r in (1e-1, 1e-2, 1e-3)]
    errors = [abs(ratio / unit_volume - 1) for ratio in ratios]

    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-5


def test_small_ball_measure_scales_with_radius(modular, picard):
    for lat in (modular, picard):
        n = lat.model.n
        unit_volume = math.pi if n == 2 else 4 * math.pi / 3
        for r in (1e-1, 1e-2, 1e-3):
            estimate = Targets.measure(
                Targets.ball(lat, ConstantSchedule(r)), 1)

            assert estimate.exact
            assert estimate.value / r ** n == pytest.approx(
                unit_volume / lat.covolume, rel=r)
