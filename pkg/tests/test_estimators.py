"""Tests for orbit estimators and their observers."""

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



import numpy as np
import pytest

from hypshrink.errors import ConfigurationError, InvalidArgumentError
from hypshrink.geometry.flows import Flows, OrbitBatch
from hypshrink.geometry.lattice import Lattices
from hypshrink.geometry.targets import Targets
from hypshrink.geometry.types import (
    CUSP,
    ConstantSchedule,
    LogHeightSchedule,
)
from hypshrink.stats.estimators import (
    AlwaysHitObserver,
    Estimators,
    GridObserver,
)


def log_height(reps):
    return np.log(Lattices.batch_projection(reps)[1])


def test_periodic_orbit_stays_in_frozen_ball(
        modular, horocycle, periodic_start):
    fam = Targets.ball(modular, ConstantSchedule(0.5), periodic_start)
    grid = [1, 2, 4, 8]

    (record,) = Estimators.hit_counts(periodic_start, horocycle, fam, grid)

    np.testing.assert_array_equal(record.hit_count_frozen, grid)
    np.testing.assert_array_equal(record.hit_count_diag, grid)
    np.testing.assert_allclose(record.d_ball, 0.0, atol=1e-6)
    np.testing.assert_array_equal(record.late_diag_hits, [1, 1, 2, 4])

    tau = Estimators.hitting_times(
        periodic_start, horocycle, "ball", [0.5, 0.1, 0.01], 4, center=fam)
    np.testing.assert_array_equal(tau[0], [1, 1, 1])

    beta = Estimators.beta_plus(fam, periodic_start, horocycle, 4)
    assert beta[0] == pytest.approx(1.0)


def test_vertical_geodesic_depths(modular, geodesic, vertical_start):
    center = Targets.ball(modular, ConstantSchedule(0.1), vertical_start)

    d_ball, d_cusp = Estimators.penetration_depths(
        vertical_start, geodesic, [1, 2, 4, 8, 16], center)

    np.testing.assert_allclose(d_cusp[0], [1, 2, 4, 8, 16], atol=1e-9)
    # d(x g_m, i) = m, so the running minimum is the first step
    np.testing.assert_allclose(d_ball[0], 1.0, atol=1e-9)


def test_cusp_hitting_times(geodesic, vertical_start):
    tau = Estimators.hitting_times(
        vertical_start, geodesic, CUSP, [0.5, 2.5, 10.0], 5)

    np.testing.assert_array_equal(tau[0], [1, 3, np.inf])


def test_hitting_times_need_monotone_levels(geodesic, vertical_start):
    with pytest.raises(InvalidArgumentError):
        Estimators.hitting_times(
            vertical_start, geodesic, CUSP, [1.0, 3.0, 2.0], 5)


def test_ball_hitting_times_need_centre(geodesic, vertical_start):
    with pytest.raises(InvalidArgumentError):
        Estimators.hitting_times(vertical_start, geodesic, "ball", [0.1], 5)


def test_beta_plus_of_log_height(geodesic, vertical_start):
    assert Estimators.beta_plus(
        log_height, vertical_start, geodesic, 1)[0] == pytest.approx(1.0)
    assert Estimators.beta_plus(
        log_height, vertical_start, geodesic, 4)[0] == pytest.approx(2.5)

    ones = Estimators.beta_plus(
        lambda reps: np.ones(len(reps)), vertical_start, geodesic, 7)
    assert ones[0] == pytest.approx(1.0)

    with pytest.raises(InvalidArgumentError):
        Estimators.beta_plus(log_height, vertical_start, geodesic, 0)


def test_frozen_counts_match_membership(modular, geodesic, samples):
    fam = Targets.cusp(modular, LogHeightSchedule(0.5, 0.0))
    grid = [1, 2, 4, 8, 16]

    records = Estimators.hit_counts(samples, geodesic, fam, grid)

    heights = np.stack(
        [log_height(reps) for _, reps in OrbitBatch(samples, geodesic).walk(16)],
        axis=1)
    for row, record in enumerate(records):
        expected = [
            int(np.sum(heights[row, :m] >= Targets.threshold(fam, m)))
            for m in grid
        ]
        np.testing.assert_array_equal(record.hit_count_frozen, expected)


def test_beta_times_volume_is_frozen_count(modular, geodesic, samples):
    fam = Targets.cusp(modular, LogHeightSchedule(0.5, 0.0))
    grid = [2, 8]

    records = Estimators.hit_counts(samples, geodesic, fam, grid)
    frozen = np.stack([r.hit_count_frozen for r in records])

    for j, m in enumerate(grid):
        beta = Estimators.beta_plus(fam, samples, geodesic, m)
        np.testing.assert_allclose(beta * m, frozen[:, j])


def test_diagonal_counts_never_exceed_frozen(modular, geodesic, samples):
    fam = Targets.cusp(modular, LogHeightSchedule(0.5, 0.0))

    for record in Estimators.hit_counts(samples, geodesic, fam, [4, 16]):
        assert np.all(record.hit_count_diag <= record.hit_count_frozen)
        assert np.all(record.late_diag_hits <= record.hit_count_diag)


def test_grid_observer_rejects_bad_grids():
    with pytest.raises(InvalidArgumentError):
        GridObserver(4, [1, 4, 2])

    with pytest.raises(InvalidArgumentError):
        GridObserver(4, [0, 1])

    assert GridObserver(4, [1, 2, 4]).slot(3) == 2


def test_always_hit_low_cusp(modular, geodesic, samples):
    fam = Targets.cusp(modular, ConstantSchedule(0.5))

    out = Estimators.always_hit_kernel(samples, geodesic, fam, 2, 8)

    assert np.all(out["always_hit"])
    assert np.all(out["first_miss"] == 0)


def test_always_hit_rejects_custom_targets(modular):
    fam = Targets.custom(modular, lambda p, m: True, lambda m: 0.5)

    with pytest.raises(ConfigurationError):
        AlwaysHitObserver(2, fam, 1, 4, 1)


def test_window_hits_need_rank_one(modular, samples):
    fam = Targets.cusp(modular, ConstantSchedule(2.0))
    with pytest.raises(ConfigurationError):
        Estimators.window_kernel(
            samples, Flows.unipotent(np.eye(2)), fam, 1, 4, 4)
