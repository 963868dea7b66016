"""Tests for the matrix model group operations."""

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

from hypshrink.errors import DriftError, InvalidArgumentError
from hypshrink.geometry.group_core import GroupCore
from hypshrink.geometry.types import ModelParams, SL2C, SL2R, SON1

MODELS = [ModelParams(2, SL2R), ModelParams(3, SL2C), ModelParams(3, SON1),
          ModelParams(4, SON1)]


def random_element(model, rng):
    x = rng.normal(size=model.n - 1)
    t = rng.normal()
    if model.model == SL2R:
        angles = [rng.uniform(0, 2 * math.pi)]
    elif model.model == SL2C:
        angles = rng.normal(size=4)
    else:
        angles = rng.normal(size=(model.n, model.n))

    head = GroupCore.compose(GroupCore.make_unipotent(x, model),
                             GroupCore.make_diag(t, model))

    return GroupCore.compose(head, GroupCore.make_rotation(angles, model))


def test_make_diag_zero_is_identity():
    for model in MODELS:
        assert np.allclose(GroupCore.make_diag(0.0, model).entries,
                           np.eye(model.size))


def test_make_diag_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        GroupCore.make_diag(math.inf, ModelParams(2, SL2R))


def test_make_unipotent_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        GroupCore.make_unipotent([1.0, 2.0], ModelParams(2, SL2R))


def test_make_unipotent_is_additive():
    model = ModelParams(4, SON1)
    x, y = np.array([0.3, -1.0, 2.0]), np.array([1.5, 0.2, -0.7])
    product = GroupCore.compose(GroupCore.make_unipotent(x, model),
                                GroupCore.make_unipotent(y, model))

    assert np.allclose(product.entries,
                       GroupCore.make_unipotent(x + y, model).entries)


@pytest.mark.parametrize("t", [1.0, -1.0, 5.0, -5.0])
def test_cartan_t_of_diagonal(t):
    for model in MODELS:
        assert GroupCore.cartan_t(GroupCore.make_diag(t, model)) == \
            pytest.approx(abs(t), abs=1e-10)


def test_cartan_t_of_identity():
    for model in MODELS:
        assert GroupCore.cartan_t(GroupCore.identity(model)) == \
            pytest.approx(0.0, abs=1e-12)


def test_cartan_t_matches_half_plane_distance():
    g = GroupCore.make_unipotent([1.0], ModelParams(2, SL2R))

    assert GroupCore.cartan_t(g) == pytest.approx(math.acosh(1.5), abs=1e-12)
    assert GroupCore.cartan_t(g) == pytest.approx(0.9624, abs=1e-4)


def test_cartan_t_hyperboloid_unipotent():
    g = GroupCore.make_unipotent([3.0], ModelParams(2, SON1))

    assert GroupCore.cartan_t(g) == pytest.approx(math.acosh(5.5), abs=1e-12)
    assert GroupCore.cartan_t(g) == pytest.approx(2.3896, abs=1e-4)


def test_half_space_distance_between_heights():
    assert GroupCore.half_space_distance(0.0, 1.0, 0.0, 2.0) == \
        pytest.approx(math.log(2))


def test_iwasawa_of_identity():
    model = ModelParams(3, SL2C)
    coords = GroupCore.iwasawa(GroupCore.identity(model))

    assert np.allclose(coords.x, 0.0)
    assert coords.t == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(coords.k.entries, np.eye(2))


def test_decompositions_reconstruct_the_element():
    rng = np.random.default_rng(7)
    for model in MODELS:
        for _ in range(5):
            g = random_element(model, rng)

            iwasawa = GroupCore.from_iwasawa(GroupCore.iwasawa(g))
            cartan_coords = GroupCore.cartan(g)
            cartan = GroupCore.from_cartan(cartan_coords)

            assert np.allclose(iwasawa.entries, g.entries, atol=1e-9)
            assert np.allclose(cartan.entries, g.entries, atol=1e-9)
            assert cartan_coords.t >= 0
            assert cartan_coords.t == pytest.approx(
                GroupCore.cartan_t(g), abs=1e-9)


def test_inverse_composes_to_identity():
    rng = np.random.default_rng(11)
    for model in MODELS:
        g = random_element(model, rng)
        prod = GroupCore.compose(g, GroupCore.inverse(g))

        assert np.allclose(prod.entries, np.eye(model.size), atol=1e-9)


def test_power_matches_repeated_products():
    model = ModelParams(2, SL2R)
    g = GroupCore.make_unipotent([0.5], model)

    assert np.allclose(GroupCore.power(g, 4).entries,
                       GroupCore.make_unipotent([2.0], model).entries)
    assert np.allclose(GroupCore.power(g, -2).entries,
                       GroupCore.make_unipotent([-1.0], model).entries)


def test_compose_model_mismatch():
    with pytest.raises(InvalidArgumentError):
        GroupCore.compose(GroupCore.identity(ModelParams(2, SL2R)),
                          GroupCore.identity(ModelParams(3, SL2C)))


def test_element_rejects_matrix_off_the_group():
    with pytest.raises(InvalidArgumentError):
        GroupCore.element([[2.0, 0.0], [0.0, 2.0]], ModelParams(2, SL2R))


def test_renormalize_keeps_exact_elements():
    g = GroupCore.make_diag(0.7, ModelParams(2, SL2R))

    assert np.allclose(GroupCore.renormalize(g).entries, g.entries,
                       atol=1e-14)


def test_renormalize_restores_determinant():
    model = ModelParams(2, SL2R)
    g = GroupCore.make_diag(0.7, model)
    scaled = type(g)(g.entries * (1 + 1e-6), model)

    fixed = GroupCore.renormalize(scaled)

    assert np.linalg.det(fixed.entries) == pytest.approx(1.0, abs=1e-14)


def test_renormalize_refuses_large_drift():
    model = ModelParams(2, SL2R)
    g = GroupCore.make_diag(0.7, model)

    with pytest.raises(DriftError):
        GroupCore.renormalize(type(g)(g.entries * 1.01, model))


def random_rotation(model, rng):
    if model.model == SL2R:
        return GroupCore.make_rotation([rng.uniform(0, 2 * math.pi)], model)
    if model.model == SL2C:
        return GroupCore.make_rotation(rng.normal(size=4), model)

    return GroupCore.make_rotation(rng.normal(size=(model.n, model.n)), model)


def unipotent_direction(model, norm, rng):
    direction = rng.normal(size=model.n - 1)

    return norm * direction / np.linalg.norm(direction)


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("norm", [10.0, 100.0, 1e4])
def test_cartan_t_of_unipotent_grows_logarithmically(model, norm):
    rng = np.random.default_rng(3)
    g = GroupCore.make_unipotent(unipotent_direction(model, norm, rng), model)

    assert abs(GroupCore.cartan_t(g) - 2 * math.log(norm)) <= 0.05


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("m", [5.0, 10.0, 20.0])
def test_cartan_t_of_conjugated_diagonal_is_linear(model, m):
    rng = np.random.default_rng(5)
    x = np.full(model.n - 1, 0.5)
    left = GroupCore.compose(
        random_rotation(model, rng),
        GroupCore.compose(GroupCore.make_unipotent(x, model),
                          GroupCore.make_diag(0.3, model)))
    right = GroupCore.compose(GroupCore.make_diag(-0.4, model),
                              random_rotation(model, rng))
    g = GroupCore.compose(
        GroupCore.compose(left, GroupCore.make_diag(m, model)), right)

    slack = GroupCore.cartan_t(left) + GroupCore.cartan_t(right)
    assert abs(GroupCore.cartan_t(g) - m) <= slack + 1e-6
    assert abs(GroupCore.cartan_t(g) - m) <= 10


@pytest.mark.parametrize("model", MODELS)
def test_cartan_t_is_inverse_invariant(model):
    rng = np.random.default_rng(13)
    for _ in range(5):
        g = random_element(model, rng)

        assert GroupCore.cartan_t(GroupCore.inverse(g)) == \
            pytest.approx(GroupCore.cartan_t(g), abs=1e-9)


@pytest.mark.parametrize("model", MODELS)
def test_cartan_t_is_k_bi_invariant(model):
    rng = np.random.default_rng(17)
    for _ in range(5):
        g = random_element(model, rng)
        moved = GroupCore.compose(
            GroupCore.compose(random_rotation(model, rng), g),
            random_rotation(model, rng))

        assert GroupCore.cartan_t(moved) == \
            pytest.approx(GroupCore.cartan_t(g), abs=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("model", MODELS[:3])
def test_renormalize_holds_long_products_on_the_group(model):
    rng = np.random.default_rng(19)
    # an elliptic element off K, so powers stay bounded but are not orthogonal
    squeeze = GroupCore.make_diag(0.8, model)
    step = GroupCore.compose(
        GroupCore.compose(squeeze, random_rotation(model, rng)),
        GroupCore.inverse(squeeze))

    entries = GroupCore.identity(model).entries
    for k in range(1, 10 ** 6 + 1):
        entries = entries @ step.entries
        if k % 1024 == 0:
            entries = GroupCore.renormalize(
                type(step)(entries, model)).entries

    final = type(step)(entries, model)
    assert GroupCore.defect(final) < 1e-9
    assert GroupCore.cartan_t(final) <= 2 * 0.8 + 1e-6
