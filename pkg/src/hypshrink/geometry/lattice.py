"""Modular and Picard lattices, reduction and quotient distances."""

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

import functools
import itertools
import logging
import math

from typing import Dict, List, Tuple

import numpy as np

from scipy import integrate

from hypshrink.errors import InvalidArgumentError, ReductionError
from hypshrink.geometry.group_core import GroupCore
from hypshrink.geometry.types import (
    GroupElement,
    Lattice,
    ModelParams,
    MODULAR,
    PICARD,
    QuotientPoint,
    RepBatch,
    SL2C,
    SL2R,
)

logger = logging.getLogger(__name__)

MAX_MOVES = 10 ** 6
INVERSION_TOL = 1e-12
BOUNDARY_TOL = 1e-9


@functools.lru_cache(maxsize=None)
def modular_covolume() -> float:
    """Hyperbolic area of {|Re z| <= 1/2, |z| >= 1}."""
    area, _ = integrate.quad(lambda x: 1 / math.sqrt(1 - x * x), -0.5, 0.5)

    return area


@functools.lru_cache(maxsize=None)
def picard_covolume() -> float:
    """Hyperbolic volume of the Picard domain, integrating out the height."""
    volume, _ = integrate.dblquad(
        lambda y, x: 1 / (2 * (1 - x * x - y * y)),
        -0.5, 0.5, 0.0, 0.5, epsabs=1e-13, epsrel=1e-12)

    return volume


class Lattices:
    """Construction of the built-in lattices and operations on Gamma \\ G."""

    @staticmethod
    def _sl2(entries, model: ModelParams) -> GroupElement:
        return GroupCore.element(entries, model)

    @staticmethod
    def modular(word_radius: int = 2) -> Lattice:
        """PSL(2, Z) acting on the upper half plane."""
        model = ModelParams(2, SL2R)
        generators = {
            "T": Lattices._sl2([[1, 1], [0, 1]], model),
            "S": Lattices._sl2([[0, -1], [1, 0]], model),
        }
        relations = [("S", "S"), ("S", "T", "S", "T", "S", "T")]

        return Lattice(
            name=MODULAR,
            model=model,
            generators=generators,
            relations=relations,
            covolume=modular_covolume(),
            word_radius=word_radius,
            domain_floor=math.sqrt(3) / 2,
            strip_area=1.0,
            base_point=(0j, 1.0),
        )

    @staticmethod
    def picard(word_radius: int = 2) -> Lattice:
        """PSL(2, Z[i]) acting on upper half space."""
        model = ModelParams(3, SL2C)
        generators = {
            "T": Lattices._sl2([[1, 1], [0, 1]], model),
            "U": Lattices._sl2([[1, 1j], [0, 1]], model),
            "S": Lattices._sl2([[0, -1], [1, 0]], model),
            "L": Lattices._sl2([[1j, 0], [0, -1j]], model),
        }
        relations = [
            ("S", "S"),
            ("S", "T", "S", "T", "S", "T"),
            ("L", "L"),
            ("U", "L", "U", "L"),
            ("T", "L", "T", "L"),
            ("S", "L", "S", "L"),
        ]

        return Lattice(
            name=PICARD,
            model=model,
            generators=generators,
            relations=relations,
            covolume=picard_covolume(),
            word_radius=word_radius,
            domain_floor=1 / math.sqrt(2),
            strip_area=0.5,
            base_point=(0j, 1.0),
        )

    @staticmethod
    def build(name: str, word_radius: int = 2) -> Lattice:
        builders = {MODULAR: Lattices.modular, PICARD: Lattices.picard}

        if name not in builders:
            raise InvalidArgumentError(
                f"unknown lattice {name}; expected one of {sorted(builders)}")

        return builders[name](word_radius)

    @staticmethod
    def relation_defect(lat: Lattice, relation: Tuple[str, ...]) -> float:
        """Distance of a relation word from +-I, zero in PSL2."""
        prod = GroupCore.identity(lat.model)
        for name in relation:
            prod = GroupCore.compose(prod, lat.generators[name])

        eye = np.eye(2)

        return float(min(
            np.max(np.abs(prod.entries - eye)),
            np.max(np.abs(prod.entries + eye))))

    @staticmethod
    def in_domain(
        lat: Lattice, w: complex, h: float, tol: float = BOUNDARY_TOL
    ) -> bool:
        """Closed fundamental domain predicate with boundary tolerance."""
        w = complex(w)
        inside = abs(w.real) <= 0.5 + tol and abs(w) ** 2 + h * h >= 1 - tol

        if lat.name == PICARD:
            inside = inside and -tol <= w.imag <= 0.5 + tol

        return bool(inside)

    @staticmethod
    def _translation(w: complex, lat: Lattice) -> complex:
        shift = complex(math.floor(w.real + 0.5), 0)

        if lat.name == PICARD:
            shift += 1j * math.floor(w.imag + 0.5)

        return shift

    @staticmethod
    def _translation_word(shift: complex) -> str:
        word = f"T^{-int(shift.real)}" if shift.real else ""
        if shift.imag:
            word += f"U^{-int(shift.imag)}"

        return word

    @staticmethod
    def reduce(g: GroupElement, lat: Lattice) -> QuotientPoint:
        """Left multiplies g by a lattice element landing in the domain.

        Moves are applied in a fixed order: translation, then the unit
        symmetry (Picard only), then the inversion when the point lies inside
        the unit hemisphere."""
        if g.model != lat.model:
            raise InvalidArgumentError(
                f"element model {g.model.model} does not match lattice "
                f"{lat.name}")

        (a, b), (c, d) = g.entries.astype(np.complex128)
        word_log: List[str] = []

        for _ in range(MAX_MOVES):
            denom = abs(c) ** 2 + abs(d) ** 2
            w = (a * np.conj(c) + b * np.conj(d)) / denom
            shift = Lattices._translation(w, lat)

            if shift != 0:
                a, b = a - shift * c, b - shift * d
                word_log.append(Lattices._translation_word(shift))
                w = w - shift

            if lat.name == PICARD and w.imag < 0:
                a, b, c, d = 1j * a, 1j * b, -1j * c, -1j * d
                word_log.append("L")
                continue

            if abs(w) ** 2 + 1 / denom ** 2 < 1 - INVERSION_TOL:
                a, b, c, d = -c, -d, a, b
                word_log.append("S")
                continue

            break
        else:
            raise ReductionError(
                f"reduction did not terminate after {MAX_MOVES} moves")

        entries = np.array([[a, b], [c, d]])
        if lat.model.model == SL2R:
            entries = entries.real

        return QuotientPoint(
            GroupElement(entries, lat.model), lat, tuple(word_log))

    @staticmethod
    def reduce_batch(batch: RepBatch) -> RepBatch:
        """Reduces a batch in place, elementwise, in the order reduce uses."""
        lat = batch.lattice
        a, b, c, d = batch.a, batch.b, batch.c, batch.d
        active = np.arange(len(a))

        for _ in range(MAX_MOVES):
            if active.size == 0:
                return batch

            ca, cb, cc, cd = a[active], b[active], c[active], d[active]
            denom = np.abs(cc) ** 2 + np.abs(cd) ** 2
            w = (ca * np.conj(cc) + cb * np.conj(cd)) / denom

            shift = np.floor(w.real + 0.5)
            if lat.name == PICARD:
                shift = shift + 1j * np.floor(w.imag + 0.5)

            ca = ca - shift * cc
            cb = cb - shift * cd
            w = w - shift

            flip = np.zeros(active.size, dtype=bool)
            if lat.name == PICARD:
                flip = w.imag < 0
                ca = np.where(flip, 1j * ca, ca)
                cb = np.where(flip, 1j * cb, cb)
                cc = np.where(flip, -1j * cc, cc)
                cd = np.where(flip, -1j * cd, cd)

            invert = ~flip & (
                np.abs(w) ** 2 + 1 / denom ** 2 < 1 - INVERSION_TOL)
            ca, cb, cc, cd = (
                np.where(invert, -cc, ca), np.where(invert, -cd, cb),
                np.where(invert, ca, cc), np.where(invert, cb, cd))

            a[active], b[active], c[active], d[active] = ca, cb, cc, cd
            active = active[flip | invert]

        raise ReductionError(
            f"batch reduction did not terminate after {MAX_MOVES} moves")

    @staticmethod
    def batch_from_elements(
        elements: List[GroupElement], lat: Lattice
    ) -> RepBatch:
        entries = np.array([g.entries for g in elements], dtype=lat.model.dtype)

        return RepBatch(
            entries[:, 0, 0].copy(), entries[:, 0, 1].copy(),
            entries[:, 1, 0].copy(), entries[:, 1, 1].copy(), lat)

    @staticmethod
    def batch_points(batch: RepBatch) -> List[QuotientPoint]:
        points = []
        for idx in range(len(batch)):
            entries = np.array(
                [[batch.a[idx], batch.b[idx]], [batch.c[idx], batch.d[idx]]],
                dtype=batch.lattice.model.dtype)
            points.append(QuotientPoint(
                GroupElement(entries, batch.lattice.model), batch.lattice))

        return points

    @staticmethod
    def batch_projection(batch: RepBatch) -> Tuple[np.ndarray, np.ndarray]:
        """Base point images (w, h) for every representative in a batch."""
        denom = np.abs(batch.c) ** 2 + np.abs(batch.d) ** 2
        w = (batch.a * np.conj(batch.c) + batch.b * np.conj(batch.d)) / denom

        return w, 1 / denom

    @staticmethod
    def _moebius(entries: np.ndarray, w, h):
        """Action of matrices with shape (J, 2, 2) on one point (w, h)."""
        a, b = entries[:, 0, 0], entries[:, 0, 1]
        c, d = entries[:, 1, 0], entries[:, 1, 1]
        lin = c * w + d
        denom = np.abs(lin) ** 2 + np.abs(c) ** 2 * h * h
        w_img = ((a * w + b) * np.conj(lin) + a * np.conj(c) * h * h) / denom

        return w_img, h / denom

    @staticmethod
    @functools.lru_cache(maxsize=None)
    def _word_ball_cached(name: str, word_radius: int) -> np.ndarray:
        lat = Lattices.build(name, word_radius)
        letters = []
        for gen in lat.generators.values():
            letters.append(gen.entries.astype(np.complex128))
            letters.append(GroupCore.inverse(gen).entries.astype(np.complex128))

        words: Dict[tuple, np.ndarray] = {}
        for length in range(word_radius + 1):
            for word in itertools.product(range(len(letters)), repeat=length):
                prod = np.eye(2, dtype=np.complex128)
                for idx in word:
                    prod = prod @ letters[idx]

                # PSL2: identify +-g, keyed on a rounded canonical sign
                flat = np.round(prod.ravel(), 9)
                pivot = flat[np.flatnonzero(np.abs(flat) > 1e-9)[0]]
                sign = pivot / abs(pivot)
                key = tuple(np.round(flat / sign, 9))
                words.setdefault(key, prod)

        return np.array(list(words.values()))

    @staticmethod
    def word_ball(lat: Lattice) -> np.ndarray:
        """Distinct elements of PSL2 spelled by words of bounded length."""
        return Lattices._word_ball_cached(lat.name, lat.word_radius)

    @staticmethod
    def point_images(lat: Lattice, w: complex, h: float) -> np.ndarray:
        """Images of (w, h) under the word ball, shape (J, 2) of (w, h)."""
        w_img, h_img = Lattices._moebius(Lattices.word_ball(lat), w, h)

        return np.stack([w_img, h_img.real.astype(np.complex128)], axis=1)

    @staticmethod
    def distance_to_images(
        w: np.ndarray, h: np.ndarray, images: np.ndarray
    ) -> np.ndarray:
        """Minimum distance from each (w, h) to a set of point images."""
        w_img = images[:, 0]
        h_img = images[:, 1].real
        dist = GroupCore.half_space_distance(
            np.asarray(w)[:, None], np.asarray(h)[:, None],
            w_img[None, :], h_img[None, :])

        return dist.min(axis=1)

    @staticmethod
    def quotient_distance(p: QuotientPoint, q: QuotientPoint) -> float:
        """Hyperbolic distance on Gamma \\ H^n over the word ball."""
        if p.lattice.name != q.lattice.name:
            raise InvalidArgumentError("points belong to different lattices")

        images = Lattices.point_images(q.lattice, q.horizontal, q.height)
        dist = Lattices.distance_to_images(
            np.array([p.horizontal]), np.array([p.height]), images)

        return float(dist[0])

    @staticmethod
    def cusp_height(p: QuotientPoint) -> float:
        """Log height of the reduced representative."""
        return math.log(p.height)

    @staticmethod
    def injectivity_radius(lat: Lattice, w: complex, h: float) -> float:
        """Half the least displacement of (w, h) by a nontrivial word."""
        images = Lattices.point_images(lat, w, h)
        dist = GroupCore.half_space_distance(
            w, h, images[:, 0], images[:, 1].real)
        # the identity word sits at distance 0; elliptic fixed points too
        ball = Lattices.word_ball(lat)
        trivial = np.array([
            np.allclose(g, np.eye(2), atol=1e-12)
            or np.allclose(g, -np.eye(2), atol=1e-12) for g in ball])

        return float(dist[~trivial].min() / 2)

    @staticmethod
    def point_from_base(lat: Lattice, w: complex, h: float) -> QuotientPoint:
        """Reduced point whose base projection is (w, h) with trivial frame."""
        sqrt_h = math.sqrt(h)
        entries = np.array(
            [[sqrt_h, w / sqrt_h], [0, 1 / sqrt_h]], dtype=np.complex128)
        if lat.model.model != SL2C:
            entries = entries.real

        return Lattices.reduce(GroupElement(entries, lat.model), lat)
