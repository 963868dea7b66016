"""Arithmetic and decompositions in the isometry groups of hyperbolic space."""

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

from typing import Tuple, Union

import numpy as np

from hypshrink.errors import DriftError, InvalidArgumentError
from hypshrink.geometry.types import (
    CartanCoords,
    GroupElement,
    IwasawaCoords,
    ModelParams,
    SL2C,
    SL2R,
    SON1,
)

logger = logging.getLogger(__name__)

GROUP_TOL = 1e-9
DRIFT_LIMIT = 1e-3


class GroupCore:
    """Group operations for the SL2R, SL2C and SOn1 matrix models.

    SL2 models act on upper half space by Moebius transformations with base
    point (0, 1); the SOn1 model acts on the hyperboloid with base point
    e_{n+1}. In every model a_t displaces the base point by exactly t.
    """

    @staticmethod
    def j_form(n: int) -> np.ndarray:
        """The quadratic form diag(1, ..., 1, -1) preserved by SOn1."""
        form = np.eye(n + 1)
        form[n, n] = -1.0

        return form

    @staticmethod
    def defect(g: GroupElement) -> float:
        """Distance of g from the group constraint manifold."""
        if g.model.model == SON1:
            form = GroupCore.j_form(g.model.n)
            err = g.entries.T @ form @ g.entries - form

            return float(np.max(np.abs(err)))

        return float(abs(np.linalg.det(g.entries) - 1))

    @staticmethod
    def element(
        entries: Union[np.ndarray, list], model: ModelParams
    ) -> GroupElement:
        """Wraps a matrix as a GroupElement after checking the constraints."""
        arr = np.array(entries, dtype=model.dtype)

        if arr.shape != (model.size, model.size):
            raise InvalidArgumentError(
                f"{model.model} expects a {model.size}x{model.size} matrix, "
                f"got shape {arr.shape}")

        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("group element has non-finite entries")

        g = GroupElement(arr, model)
        defect = GroupCore.defect(g)
        if defect > GROUP_TOL:
            raise InvalidArgumentError(
                f"matrix is not in {model.model}: defect {defect:.3e}")

        return g

    @staticmethod
    def identity(model: ModelParams) -> GroupElement:
        return GroupElement(np.eye(model.size, dtype=model.dtype), model)

    @staticmethod
    def make_diag(t: float, model: ModelParams) -> GroupElement:
        """The Cartan element a_t."""
        if not math.isfinite(t):
            raise InvalidArgumentError(f"diagonal parameter t={t} not finite")

        if model.model == SON1:
            size = model.size
            entries = np.eye(size)
            entries[size - 2, size - 2] = math.cosh(t)
            entries[size - 1, size - 1] = math.cosh(t)
            entries[size - 2, size - 1] = math.sinh(t)
            entries[size - 1, size - 2] = math.sinh(t)

            return GroupElement(entries, model)

        entries = np.array(
            [[math.exp(t / 2), 0], [0, math.exp(-t / 2)]], dtype=model.dtype)

        return GroupElement(entries, model)

    @staticmethod
    def _as_vector(x, model: ModelParams) -> np.ndarray:
        vec = np.atleast_1d(np.asarray(x, dtype=np.float64))

        if vec.ndim != 1 or vec.shape[0] != model.n - 1:
            raise InvalidArgumentError(
                f"unipotent parameter must have dimension {model.n - 1}, "
                f"got {vec.shape}")

        if not np.all(np.isfinite(vec)):
            raise InvalidArgumentError("unipotent parameter not finite")

        return vec

    @staticmethod
    def make_unipotent(x, model: ModelParams) -> GroupElement:
        """The horospherical element n_x, additive in x."""
        vec = GroupCore._as_vector(x, model)

        if model.model == SL2R:
            return GroupElement(
                np.array([[1.0, vec[0]], [0.0, 1.0]]), model)

        if model.model == SL2C:
            return GroupElement(
                np.array([[1, complex(vec[0], vec[1])], [0, 1]],
                         dtype=np.complex128), model)

        n = model.n
        half_sq = float(vec @ vec) / 2
        entries = np.eye(n + 1)
        entries[: n - 1, n - 1] = vec
        entries[: n - 1, n] = -vec
        entries[n - 1, : n - 1] = -vec
        entries[n, : n - 1] = -vec
        entries[n - 1, n - 1] = 1 - half_sq
        entries[n - 1, n] = half_sq
        entries[n, n - 1] = -half_sq
        entries[n, n] = 1 + half_sq

        return GroupElement(entries, model)

    @staticmethod
    def make_rotation(angles, model: ModelParams) -> GroupElement:
        """An element of the maximal compact K from rotation parameters.

        SL2R takes one angle, SL2C takes a unit quaternion (4 reals) and SOn1
        takes a square matrix of size n that is orthogonalized."""
        if model.model == SL2R:
            theta = float(np.atleast_1d(angles)[0])
            entries = np.array(
                [[math.cos(theta), math.sin(theta)],
                 [-math.sin(theta), math.cos(theta)]])

            return GroupElement(entries, model)

        if model.model == SL2C:
            quat = np.asarray(angles, dtype=np.float64)
            quat = quat / np.linalg.norm(quat)
            alpha = complex(quat[0], quat[1])
            beta = complex(quat[2], quat[3])
            entries = np.array(
                [[alpha, beta], [-np.conj(beta), np.conj(alpha)]])

            return GroupElement(entries, model)

        n = model.n
        q_mat, r_mat = np.linalg.qr(np.asarray(angles, dtype=np.float64))
        q_mat = q_mat * np.sign(np.diag(r_mat))
        if np.linalg.det(q_mat) < 0:
            q_mat[:, 0] = -q_mat[:, 0]

        entries = np.eye(n + 1)
        entries[:n, :n] = q_mat

        return GroupElement(entries, model)

    @staticmethod
    def _check_same_model(g: GroupElement, h: GroupElement):
        if g.model != h.model:
            raise InvalidArgumentError(
                f"model mismatch: {g.model.model}(n={g.model.n}) vs "
                f"{h.model.model}(n={h.model.n})")

    @staticmethod
    def compose(g: GroupElement, h: GroupElement) -> GroupElement:
        GroupCore._check_same_model(g, h)

        return GroupElement(g.entries @ h.entries, g.model)

    @staticmethod
    def inverse(g: GroupElement) -> GroupElement:
        """Exact inverse: adjugate for SL2, J g^T J for SOn1."""
        if g.model.model == SON1:
            form = GroupCore.j_form(g.model.n)

            return GroupElement(form @ g.entries.T @ form, g.model)

        (a, b), (c, d) = g.entries

        return GroupElement(
            np.array([[d, -b], [-c, a]], dtype=g.model.dtype), g.model)

    @staticmethod
    def power(g: GroupElement, m: int) -> GroupElement:
        """g^m by repeated squaring, negative m through the inverse."""
        base = g if m >= 0 else GroupCore.inverse(g)
        result = np.linalg.matrix_power(base.entries, abs(m))

        return GroupElement(result, g.model)

    @staticmethod
    def distance_from_quotient(quotient: np.ndarray) -> np.ndarray:
        """Hyperbolic distance from q = (cosh d - 1), stable near zero."""
        return 2 * np.arcsinh(np.sqrt(np.maximum(quotient, 0) / 2))

    @staticmethod
    def half_space_distance(w1, h1, w2, h2) -> np.ndarray:
        """Distance in upper half space between (w1, h1) and (w2, h2).

        Horizontal coordinates may be real (n=2) or complex (n=3); inputs
        broadcast."""
        num = np.abs(np.asarray(w1) - np.asarray(w2)) ** 2 + (
            np.asarray(h1) - np.asarray(h2)) ** 2

        return GroupCore.distance_from_quotient(
            num / (2 * np.asarray(h1) * np.asarray(h2)))

    @staticmethod
    def base_projection(g: GroupElement) -> Tuple[complex, float]:
        """Image (w, h) of the base point under an SL2 element."""
        (a, b), (c, d) = g.entries
        denom = abs(c) ** 2 + abs(d) ** 2
        w = (a * np.conj(c) + b * np.conj(d)) / denom

        return complex(w), float(1 / denom)

    @staticmethod
    def cartan_t(g: GroupElement) -> float:
        """Displacement t >= 0 of the base point under g."""
        if g.model.model == SON1:
            trace = float(np.sum(g.entries * g.entries))
            # tr(g^T g) = n - 1 + 2cosh(2t) = n + 1 + 4sinh(t)^2
            sinh_sq = (trace - (g.model.n + 1)) / 4

            return float(np.arcsinh(math.sqrt(max(sinh_sq, 0.0))))

        sigma_max = np.linalg.svd(g.entries, compute_uv=False)[0]

        return max(0.0, 2 * math.log(sigma_max))

    @staticmethod
    def _son1_frame(u: np.ndarray, n: int) -> np.ndarray:
        """A rotation in SO(n) sending e_n to the unit vector u."""
        e_n = np.zeros(n)
        e_n[n - 1] = 1.0

        if np.allclose(u, e_n, atol=1e-15):
            return np.eye(n)

        if np.allclose(u, -e_n, atol=1e-15):
            rot = np.eye(n)
            rot[0, 0] = -1.0
            rot[n - 1, n - 1] = -1.0

            return rot

        def householder(v):
            return np.eye(n) - 2 * np.outer(v, v) / (v @ v)

        return householder(u + e_n) @ householder(e_n)

    @staticmethod
    def cartan(g: GroupElement) -> CartanCoords:
        """Cartan decomposition g = k1 a_t k2 with t >= 0."""
        model = g.model

        if model.model == SON1:
            n = model.n
            v = g.entries[:, n]
            top_norm = float(np.linalg.norm(v[:n]))
            t = float(np.arcsinh(top_norm))
            u = v[:n] / top_norm if top_norm > 0 else np.eye(n)[n - 1]

            k1_entries = np.eye(n + 1)
            k1_entries[:n, :n] = GroupCore._son1_frame(u, n)
            k1 = GroupElement(k1_entries, model)
            rest = GroupCore.compose(
                GroupCore.make_diag(-t, model), GroupCore.inverse(k1))

            return CartanCoords(k1, t, GroupCore.compose(rest, g))

        u_mat, sigma, vh_mat = np.linalg.svd(g.entries)
        t = max(0.0, 2 * math.log(sigma[0]))

        if model.model == SL2R:
            if np.linalg.det(u_mat) < 0:
                flip = np.diag([1.0, -1.0])
                u_mat = u_mat @ flip
                vh_mat = flip @ vh_mat
        else:
            phase = np.exp(-0.5j * np.angle(np.linalg.det(u_mat)))
            u_mat = u_mat * phase
            vh_mat = vh_mat / phase

        return CartanCoords(
            GroupElement(u_mat.astype(model.dtype), model),
            t,
            GroupElement(vh_mat.astype(model.dtype), model))

    @staticmethod
    def iwasawa(g: GroupElement) -> IwasawaCoords:
        """Iwasawa coordinates g = n_x a_t k."""
        model = g.model

        if model.model == SON1:
            n = model.n
            v = g.entries[:, n]
            light = v[n] - v[n - 1]
            t = -math.log(light)
            x = -v[: n - 1] / light
        else:
            w, h = GroupCore.base_projection(g)
            t = math.log(h)
            x = np.array([w.real]) if model.model == SL2R else np.array(
                [w.real, w.imag])

        head = GroupCore.compose(
            GroupCore.make_unipotent(x, model), GroupCore.make_diag(t, model))
        k = GroupCore.compose(GroupCore.inverse(head), g)

        return IwasawaCoords(x, t, k)

    @staticmethod
    def from_iwasawa(coords: IwasawaCoords) -> GroupElement:
        model = coords.k.model
        head = GroupCore.compose(
            GroupCore.make_unipotent(coords.x, model),
            GroupCore.make_diag(coords.t, model))

        return GroupCore.compose(head, coords.k)

    @staticmethod
    def from_cartan(coords: CartanCoords) -> GroupElement:
        model = coords.k1.model
        head = GroupCore.compose(
            coords.k1, GroupCore.make_diag(coords.t, model))

        return GroupCore.compose(head, coords.k2)

    @staticmethod
    def renormalize(g: GroupElement) -> GroupElement:
        """Projects an approximate group element back onto the group."""
        defect = GroupCore.defect(g)
        if not math.isfinite(defect) or defect >= DRIFT_LIMIT:
            raise DriftError(defect)

        if g.model.model != SON1:
            det = np.linalg.det(g.entries)
            if g.model.model == SL2R:
                scale = math.sqrt(det)
            else:
                scale = np.sqrt(complex(det))

            return GroupElement(
                (g.entries / scale).astype(g.model.dtype), g.model)

        form = GroupCore.j_form(g.model.n)
        entries = g.entries.copy()
        for _ in range(8):
            err = entries.T @ form @ entries - form
            if np.max(np.abs(err)) < 1e-15:
                break

            entries = entries @ (np.eye(len(form)) - 0.5 * form @ err)

        logger.debug("renormalized SOn1 element, defect %.3e", defect)

        return GroupElement(entries, g.model)
