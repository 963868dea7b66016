"""Common methods and helper functions used throughout library."""

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

import configparser
import hashlib
import math
import os

from configparser import ConfigParser
from typing import Dict, List, Optional

import numpy as np

from hypshrink.errors import ConfigurationError
from hypshrink.geometry.flows import Flows
from hypshrink.geometry.group_core import GroupCore
from hypshrink.geometry.lattice import Lattices
from hypshrink.geometry.targets import HaarSampler, Targets
from hypshrink.geometry.types import (
    BALL,
    ConstantSchedule,
    CUSP,
    DIAGONALIZABLE,
    FlowSpec,
    Lattice,
    LogHeightSchedule,
    MeasureSchedule,
    PowerSchedule,
    QuotientPoint,
    SL2C,
    SpectralConfig,
    TargetFamily,
    UNIPOTENT,
)

RC_FILE = os.path.join(os.path.dirname(__file__), ".hypshrinkrc")

# Sections that never change the data rows of a run
HASH_EXCLUDED = {"OUTPUT", "MESSAGES CONTROL"}


class Common:
    """Common methods and helper functions used throughout library."""

    @staticmethod
    def load_default_config() -> ConfigParser:
        """Fresh parser holding the packaged defaults."""
        config = configparser.ConfigParser()
        with open(RC_FILE, encoding="UTF-8") as rc_infile:
            config.read_file(rc_infile)

        return config

    @staticmethod
    def load_config(config_file: Optional[str] = None) -> ConfigParser:
        """Packaged defaults overlaid with a user config file."""
        config = Common.load_default_config()

        if config_file:
            if not os.path.isfile(config_file):
                raise ConfigurationError(f"config file {config_file} not found")

            try:
                with open(config_file, encoding="UTF-8") as user_infile:
                    config.read_file(user_infile)
            except configparser.Error as err:
                raise ConfigurationError(
                    f"cannot parse {config_file}: {err}") from err

        return config

    @staticmethod
    def load_message_controls(config: ConfigParser) -> Dict[str, bool]:
        """Loads the config file for message control into a map."""
        msg_list = (
            config["MESSAGES CONTROL"]["disable"].replace("\n", "").split(",")
        )

        msg_dict = {msg.strip(): False for msg in msg_list if msg.strip()}

        return msg_dict

    @staticmethod
    def parse_float_list(raw: str) -> List[float]:
        items = [item.strip() for item in raw.replace("\n", "").split(",")]

        return [float(item) for item in items if item]

    @staticmethod
    def parse_int_list(raw: str) -> List[int]:
        return [int(float(item)) for item in Common.parse_float_list(raw)]

    @staticmethod
    def dyadic_grid(m_max: int, start: int = 1) -> List[int]:
        """Powers of two in [start, m_max], closed with m_max itself."""
        grid = []
        m = 1
        while m <= m_max:
            if m >= start:
                grid.append(m)
            m *= 2

        if not grid or grid[-1] != m_max:
            grid.append(m_max)

        return grid

    @staticmethod
    def load_seed(config: ConfigParser) -> int:
        raw = config["EXPERIMENT"]["seed"].strip()
        if raw == "":
            raise ConfigurationError("seed is mandatory; set EXPERIMENT.seed")

        return int(raw)

    @staticmethod
    def load_m_grid(config: ConfigParser) -> List[int]:
        """The m grid: dyadic up to m_max, or an explicit list."""
        raw = config["EXPERIMENT"]["m_grid"].strip()
        m_max = config.getint("EXPERIMENT", "m_max")

        if raw in ("", "dyadic"):
            return Common.dyadic_grid(m_max)

        return Common.parse_int_list(raw)

    @staticmethod
    def load_lattice(config: ConfigParser) -> Lattice:
        return Lattices.build(
            config["LATTICE"]["name"].strip(),
            config.getint("LATTICE", "word_radius"))

    @staticmethod
    def load_center(config: ConfigParser, lat: Lattice) -> QuotientPoint:
        """Ball centre given as `x1,x2,height`; blank means the default."""
        raw = config["LATTICE"]["center"].strip()
        if raw == "":
            return Targets.default_center(lat)

        x1, x2, height = Common.parse_float_list(raw)
        w = complex(x1, x2) if lat.model.model == SL2C else complex(x1)

        return Lattices.reduce(
            Lattices.point_from_base(lat, w, height).rep, lat)

    @staticmethod
    def load_flow(config: ConfigParser, lat: Lattice) -> FlowSpec:
        section = config["FLOW"]
        kind = section["kind"].strip()
        model = lat.model

        if kind == DIAGONALIZABLE:
            conj_x = Common.parse_float_list(section["conjugator_x"])
            conj_t = float(section["conjugator_t"] or 0.0)
            conjugator = None

            if any(conj_x) or conj_t:
                x = conj_x or [0.0] * (model.n - 1)
                conjugator = GroupCore.compose(
                    GroupCore.make_unipotent(x, model),
                    GroupCore.make_diag(conj_t, model))

            return Flows.diagonalizable(float(section["step"]), conjugator)

        if kind == UNIPOTENT:
            rank = int(section["rank"])
            raw = section["basis"].strip()
            if raw:
                basis = [Common.parse_float_list(vec)
                         for vec in raw.split(";")]
            else:
                basis = np.eye(model.n - 1)[:rank]

            spec = Flows.unipotent(basis)
            Flows.check_model(spec, model)

            return spec

        raise ConfigurationError(
            f"unknown flow kind {kind}; expected {DIAGONALIZABLE} or "
            f"{UNIPOTENT}")

    @staticmethod
    def load_target(
        config: ConfigParser,
        lat: Lattice,
        center: Optional[QuotientPoint] = None,
    ) -> TargetFamily:
        """Builds the configured ball or cusp family.

        Schedules: `power` (radius * m^-eta, or height * m^eta in the cusp),
        `loglaw`, `constant` and `measure` (min(cap, amplitude * m^-eta))."""
        section = config["TARGET"]
        kind = section["kind"].strip()
        schedule = section["schedule"].strip()
        eta = float(section["eta"])
        radius = float(section["radius"])
        height = float(section["height"])

        if kind not in (BALL, CUSP):
            raise ConfigurationError(
                f"unknown target kind {kind}; expected {BALL} or {CUSP}")

        if schedule == "loglaw":
            return Targets.schedule_loglaw(
                kind, float(section["epsilon"]), lat.model.n,
                int(section["sign"]), lat, center)

        if schedule == "measure":
            sched = MeasureSchedule(
                float(section["amplitude"]), eta, float(section["cap"]))
        elif schedule == "constant":
            sched = ConstantSchedule(radius if kind == BALL else height)
        elif schedule == "power":
            if kind == BALL:
                sched = PowerSchedule(radius, eta)
            else:
                sched = LogHeightSchedule(eta, math.log(height))
        else:
            raise ConfigurationError(
                f"unknown schedule {schedule}; expected power, loglaw, "
                f"constant or measure")

        if kind == BALL:
            return Targets.ball(lat, sched, center)

        return Targets.cusp(lat, sched)

    @staticmethod
    def load_sampler(
        config: ConfigParser, lat: Lattice, stream: int = 0
    ) -> HaarSampler:
        return HaarSampler(lat, Common.load_seed(config), stream)

    @staticmethod
    def load_spectral(
        config: ConfigParser, n: Optional[int] = None
    ) -> SpectralConfig:
        """Exceptional spectrum hypotheses; rho comes from n, or SPECTRAL.n."""
        n = n or config.getint("SPECTRAL", "n")

        return SpectralConfig(
            rho=(n - 1) / 2,
            exceptional_exponents=Common.parse_float_list(
                config["SPECTRAL"]["exceptional_exponents"]),
            decay_constant=config.getfloat("SPECTRAL", "decay_constant"))

    @staticmethod
    def config_hash(config: ConfigParser) -> str:
        """Stable digest of every setting that shapes the data rows."""
        digest = hashlib.sha256()

        for section in sorted(config.sections()):
            if section in HASH_EXCLUDED:
                continue

            for key, value in sorted(config.items(section)):
                if section == "EXPERIMENT" and key == "workers":
                    continue
                digest.update(f"{section}.{key}={value.strip()}\n".encode())

        return digest.hexdigest()[:16]

    @staticmethod
    def calculate_median(values) -> float:
        """Median over finite entries, nan when there are none."""
        arr = np.asarray(values, dtype=np.float64)
        arr = arr[np.isfinite(arr)]

        if arr.size == 0:
            return float("nan")

        return float(np.median(arr))

    @staticmethod
    def quantile_band(values, quantile: float):
        """Central band holding the given fraction of the finite values."""
        arr = np.asarray(values, dtype=np.float64)
        arr = arr[np.isfinite(arr)]

        if arr.size == 0:
            return float("nan"), float("nan")

        low, high = np.quantile(arr, [(1 - quantile) / 2, (1 + quantile) / 2])

        return float(low), float(high)
