"""Shared fixtures for the HypShrink tests."""

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

import pytest

from hypshrink.common import Common
from hypshrink.geometry.flows import Flows
from hypshrink.geometry.lattice import Lattices
from hypshrink.geometry.targets import HaarSampler


@pytest.fixture
def modular():
    return Lattices.modular()


@pytest.fixture
def picard():
    return Lattices.picard()


@pytest.fixture
def geodesic():
    return Flows.diagonalizable(1.0)


@pytest.fixture
def horocycle():
    return Flows.unipotent([[1.0]])


@pytest.fixture
def vertical_start(modular):
    """The base point i; its geodesic orbit climbs straight into the cusp."""
    return Lattices.point_from_base(modular, 0.0, 1.0)


@pytest.fixture
def periodic_start(modular):
    """The identity coset Gamma i; the unit horocycle step maps it to i + 1,
    which reduces back to i."""
    return Lattices.point_from_base(modular, 0.0, 1.0)


@pytest.fixture
def samples(modular):
    return HaarSampler(modular, seed=42).sample_batch(16)


@pytest.fixture
def config():
    config = Common.load_default_config()
    config.set("EXPERIMENT", "seed", "42")

    return config
