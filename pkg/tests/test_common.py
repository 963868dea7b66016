"""Tests for config loading and shared helpers."""

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

import pytest

from hypshrink.common import Common
from hypshrink.errors import ConfigurationError
from hypshrink.geometry.types import (
    BALL,
    CUSP,
    LogHeightSchedule,
    MeasureSchedule,
    PowerSchedule,
    UNIPOTENT,
)


def test_dyadic_grid():
    assert Common.dyadic_grid(10) == [1, 2, 4, 8, 10]
    assert Common.dyadic_grid(8) == [1, 2, 4, 8]
    assert Common.dyadic_grid(1) == [1]
    assert Common.dyadic_grid(20, start=4) == [4, 8, 16, 20]


def test_explicit_m_grid(config):
    config.set("EXPERIMENT", "m_grid", "3, 9,27")

    assert Common.load_m_grid(config) == [3, 9, 27]


def test_config_file_overlays_defaults(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[EXPERIMENT]\nseed = 7\nkind = hits\n", encoding="UTF-8")

    config = Common.load_config(str(path))

    assert Common.load_seed(config) == 7
    assert config["EXPERIMENT"]["kind"] == "hits"
    assert config["EXPERIMENT"]["samples"] == "200"


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        Common.load_config(str(tmp_path / "missing.ini"))

    path = tmp_path / "broken.ini"
    path.write_text("seed = 7\n", encoding="UTF-8")
    with pytest.raises(ConfigurationError):
        Common.load_config(str(path))


def test_seed_is_mandatory():
    with pytest.raises(ConfigurationError):
        Common.load_seed(Common.load_default_config())


def test_config_hash(config):
    digest = Common.config_hash(config)

    config.set("EXPERIMENT", "workers", "8")
    config.set("OUTPUT", "format", "jsonl")
    config.set("MESSAGES CONTROL", "disable", "W102")
    assert Common.config_hash(config) == digest

    config.set("EXPERIMENT", "seed", "43")
    assert Common.config_hash(config) != digest


def test_message_controls(config):
    config.set("MESSAGES CONTROL", "disable", "W102,\n doubling-fails")

    assert Common.load_message_controls(config) == {
        "W102": False, "doubling-fails": False}


def test_load_target_schedules(config, modular):
    fam = Common.load_target(config, modular)
    assert fam.kind == BALL
    assert fam.schedule == MeasureSchedule(0.5, 0.5, 0.5)

    config.set("TARGET", "schedule", "power")
    assert Common.load_target(config, modular).schedule == PowerSchedule(
        0.1, 0.5)

    config.set("TARGET", "kind", "cusp")
    fam = Common.load_target(config, modular)
    assert fam.kind == CUSP
    assert fam.schedule == LogHeightSchedule(0.5, math.log(2.0))

    config.set("TARGET", "schedule", "weekly")
    with pytest.raises(ConfigurationError):
        Common.load_target(config, modular)


def test_load_center(config, modular):
    config.set("LATTICE", "center", "0.1,0,3.0")

    center = Common.load_center(config, modular)

    assert center.horizontal == pytest.approx(0.1)
    assert center.height == pytest.approx(3.0)


def test_load_flow(config, picard):
    config.set("FLOW", "kind", "unipotent")
    config.set("FLOW", "rank", "2")

    spec = Common.load_flow(config, picard)

    assert spec.kind == UNIPOTENT
    assert spec.rank == 2


def test_load_spectral_uses_lattice_dimension(config):
    assert Common.load_spectral(config).rho == 1.0
    assert Common.load_spectral(config, 2).rho == 0.5


def test_median_and_band_skip_non_finite():
    values = [1.0, float("nan"), 3.0, float("inf"), 2.0]

    assert Common.calculate_median(values) == 2.0
    assert math.isnan(Common.calculate_median([float("nan")]))

    low, high = Common.quantile_band(values, 1.0)
    assert (low, high) == (1.0, 3.0)
