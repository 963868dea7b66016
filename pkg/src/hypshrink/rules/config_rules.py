"""Config contract rules and definitions."""

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

from configparser import ConfigParser
from typing import List, Optional

import numpy as np

from hypshrink.common import Common
from hypshrink.geometry.types import (
    BALL,
    CUSP,
    DIAGONALIZABLE,
    Diagnostic,
    MODULAR,
    PICARD,
    UNIPOTENT,
)
from hypshrink.results import FORMATS, SCHEMAS
from hypshrink.rules.logger import DiagnosticsLogger

LATTICE_DIMENSIONS = {MODULAR: 2, PICARD: 3}
SCHEDULES = ("power", "loglaw", "constant", "measure")
LOGLAW_MIN_HORIZON = 1000


class ConfigRules:
    """Config Rules and Definitions.

    Every rule here reports an error; errors cannot be disabled."""
    def __init__(self, console):
        self.console = console
        self.log = DiagnosticsLogger(console=console)

    @staticmethod
    def read_number(config: ConfigParser, section: str, key: str, cast=float):
        """Parsed value, or None when it is missing or malformed."""
        try:
            raw = config[section][key].strip()
            value = cast(raw)
        except (KeyError, ValueError, TypeError):
            return None

        if isinstance(value, float) and not math.isfinite(value):
            return None

        return value

    @staticmethod
    def read_floats(config: ConfigParser, section: str, key: str):
        try:
            return Common.parse_float_list(config[section][key])
        except (KeyError, ValueError):
            return None

    @staticmethod
    def dimension(config: ConfigParser) -> Optional[int]:
        return LATTICE_DIMENSIONS.get(config["LATTICE"]["name"].strip())

    def report(
        self, diagnostics: List[Diagnostic], code: str, title: str,
        message: str
    ):
        diag = Diagnostic(code, title, message, severity="error")
        diagnostics.append(diag)
        self.log.generic_logger(diag)

    # missing-seed
    def seed_rule(self, config: ConfigParser, diagnostics: List[Diagnostic]):
        rule = "Missing or Invalid Seed"
        raw = config["EXPERIMENT"]["seed"].strip()

        if raw == "":
            self.report(diagnostics, "E001", rule,
                        "EXPERIMENT.seed is mandatory; there is no default")
            return

        seed = self.read_number(config, "EXPERIMENT", "seed", int)
        if seed is None or not 0 <= seed < 2 ** 64:
            self.report(diagnostics, "E001", rule,
                        f"seed {raw} is not a 64-bit unsigned integer")

    # unknown-experiment
    def experiment_rule(
        self, config: ConfigParser, diagnostics: List[Diagnostic]
    ):
        kind = config["EXPERIMENT"]["kind"].strip()

        if kind not in SCHEMAS:
            self.report(diagnostics, "E002", "Unknown Experiment",
                        f"{kind} is not one of {sorted(SCHEMAS)}")

    # bad-lattice
    def lattice_rule(self, config: ConfigParser, diagnostics: List[Diagnostic]):
        rule = "Invalid Lattice"
        name = config["LATTICE"]["name"].strip()
        radius = self.read_number(config, "LATTICE", "word_radius", int)

        if name not in LATTICE_DIMENSIONS:
            self.report(diagnostics, "E003", rule,
                        f"{name} is not one of {sorted(LATTICE_DIMENSIONS)}")

        if radius is None or not 1 <= radius <= 4:
            self.report(diagnostics, "E003", rule,
                        "word_radius must be an integer in [1, 4]")

        center = self.read_floats(config, "LATTICE", "center")
        if center is None or (center and (len(center) != 3
                                          or center[2] <= 0)):
            self.report(diagnostics, "E003", rule,
                        "center must be blank or x1,x2,height with "
                        "height > 0")

    # bad-flow
    def flow_rule(self, config: ConfigParser, diagnostics: List[Diagnostic]):
        rule = "Invalid Flow"
        kind = config["FLOW"]["kind"].strip()

        if kind not in (DIAGONALIZABLE, UNIPOTENT):
            self.report(diagnostics, "E004", rule,
                        f"{kind} is not {DIAGONALIZABLE} or {UNIPOTENT}")
            return

        if kind == UNIPOTENT:
            return

        step = self.read_number(config, "FLOW", "step")
        if step is None or step <= 0:
            self.report(diagnostics, "E004", rule,
                        "diagonalizable step must be a finite number > 0")

        conj_t = self.read_number(config, "FLOW", "conjugator_t")
        conj_x = self.read_floats(config, "FLOW", "conjugator_x")
        n = self.dimension(config)
        if conj_t is None or conj_x is None or (
                conj_x and n and len(conj_x) != n - 1):
            self.report(diagnostics, "E004", rule,
                        "conjugator needs finite t and n - 1 coordinates x")

    # bad-schedule
    def schedule_rule(
        self, config: ConfigParser, diagnostics: List[Diagnostic]
    ):
        rule = "Schedule Parameters Out of Range"
        kind = config["TARGET"]["kind"].strip()
        schedule = config["TARGET"]["schedule"].strip()

        if kind not in (BALL, CUSP):
            self.report(diagnostics, "E005", rule,
                        f"target kind {kind} is not {BALL} or {CUSP}")

        if schedule not in SCHEDULES:
            self.report(diagnostics, "E005", rule,
                        f"schedule {schedule} is not one of {SCHEDULES}")

        checks = {
            "amplitude": lambda v: v > 0,
            "eta": lambda v: v >= 0,
            "cap": lambda v: 0 < v <= 1,
            "epsilon": lambda v: 0 <= v < 1,
            "radius": lambda v: v > 0,
            "height": lambda v: v > 0,
        }
        for key, check in checks.items():
            value = self.read_number(config, "TARGET", key)
            if value is None or not check(value):
                self.report(diagnostics, "E005", rule,
                            f"TARGET.{key} = {config['TARGET'][key]} is "
                            f"outside its range")

        sign = self.read_number(config, "TARGET", "sign", int)
        if sign not in (1, -1):
            self.report(diagnostics, "E005", rule, "TARGET.sign must be +1 or -1")

    # loglaw-horizon
    def loglaw_rule(self, config: ConfigParser, diagnostics: List[Diagnostic]):
        if config["EXPERIMENT"]["kind"].strip() != "loglaw":
            return

        m_max = self.read_number(config, "EXPERIMENT", "m_max", int)
        if m_max is not None and m_max < LOGLAW_MIN_HORIZON:
            self.report(diagnostics, "E006", "Log Law Horizon Too Short",
                        f"m_max = {m_max} < {LOGLAW_MIN_HORIZON}")

        radii = self.read_floats(config, "STATS", "r_grid") or [0.0]
        depths = self.read_floats(config, "STATS", "depth_grid") or [0.0]
        if not all(0 < r < 1 for r in radii) or not all(
                d > 0 for d in depths):
            self.report(diagnostics, "E007", "Invalid Window or Grid",
                        "r_grid needs radii in (0, 1) and depth_grid "
                        "needs depths > 0")

    # bad-window
    def window_rule(self, config: ConfigParser, diagnostics: List[Diagnostic]):
        rule = "Invalid Window or Grid"
        kind = config["EXPERIMENT"]["kind"].strip()
        raw_grid = config["EXPERIMENT"]["m_grid"].strip()

        if raw_grid not in ("", "dyadic"):
            try:
                grid = Common.parse_int_list(raw_grid)
            except ValueError:
                grid = []
            if not grid or grid[0] < 1 or any(
                    b <= a for a, b in zip(grid, grid[1:])):
                self.report(diagnostics, "E007", rule,
                            "m_grid must be strictly increasing integers "
                            ">= 1")

        if kind == "ah":
            m_lo = self.read_number(config, "EXPERIMENT", "m_lo", int)
            m_hi = self.read_number(config, "EXPERIMENT", "m_hi", int)
            if m_lo is None or m_hi is None or not 1 <= m_lo < m_hi:
                self.report(diagnostics, "E007", rule,
                            "always hitting needs 1 <= m_lo < m_hi")

        if kind == "qi":
            start = self.read_number(config, "EXPERIMENT", "window_start", int)
            end = self.read_number(config, "EXPERIMENT", "window_end", int)
            horizon = self.read_number(
                config, "EXPERIMENT", "schmidt_horizon", int)
            if start is None or end is None or not 1 <= start < end:
                self.report(diagnostics, "E007", rule,
                            "quasi-independence needs 1 <= window_start < "
                            "window_end")
            if horizon is None or horizon < 0:
                self.report(diagnostics, "E007", rule,
                            "schmidt_horizon must be an integer >= 0")

    # bad-counts
    def counts_rule(self, config: ConfigParser, diagnostics: List[Diagnostic]):
        for key in ("samples", "workers", "m_max"):
            value = self.read_number(config, "EXPERIMENT", key, int)
            if value is None or value < 1:
                self.report(diagnostics, "E008", "Invalid Count",
                            f"EXPERIMENT.{key} must be an integer >= 1")

        for key in ("renorm_cadence", "measure_samples"):
            value = self.read_number(config, "NUMERICS", key, int)
            if value is None or value < 1:
                self.report(diagnostics, "E008", "Invalid Count",
                            f"NUMERICS.{key} must be an integer >= 1")

    # bad-rank
    def rank_rule(self, config: ConfigParser, diagnostics: List[Diagnostic]):
        if config["FLOW"]["kind"].strip() != UNIPOTENT:
            return

        rule = "Unipotent Rank Out of Range"
        n = self.dimension(config)
        rank = self.read_number(config, "FLOW", "rank", int)
        if n is None:
            return

        if rank is None or not 1 <= rank <= n - 1:
            self.report(diagnostics, "E009", rule,
                        f"rank must lie in [1, {n - 1}] for this lattice")
            return

        raw = config["FLOW"]["basis"].strip()
        if not raw:
            return

        try:
            basis = np.array([Common.parse_float_list(vec)
                              for vec in raw.split(";")])
        except ValueError:
            basis = np.zeros((0, 0))

        if basis.shape != (rank, n - 1) or np.linalg.matrix_rank(
                basis) < rank:
            self.report(diagnostics, "E009", rule,
                        f"basis needs {rank} independent vectors of "
                        f"dimension {n - 1}")

    # bad-output-format
    def output_rule(self, config: ConfigParser, diagnostics: List[Diagnostic]):
        fmt = config["OUTPUT"]["format"].strip()

        if fmt not in FORMATS:
            self.report(diagnostics, "E010", "Unsupported Output Format",
                        f"{fmt} is not one of {FORMATS}")

    # bad-spectral
    def spectral_rule(
        self, config: ConfigParser, diagnostics: List[Diagnostic]
    ):
        rule = "Spectral Parameters Out of Range"
        n = self.read_number(config, "SPECTRAL", "n", int)

        if n is None or n < 2:
            self.report(diagnostics, "E011", rule,
                        "SPECTRAL.n must be an integer >= 2")
            return

        rho = (n - 1) / 2
        try:
            s = complex(config["SPECTRAL"]["s"].replace(" ", ""))
        except ValueError:
            s = complex("nan")

        if not (0 <= s.real <= rho) or (s.real > 0 and s.imag != 0):
            self.report(diagnostics, "E011", rule,
                        f"s = {config['SPECTRAL']['s']} needs "
                        f"0 <= Re s <= {rho} and s real or imaginary")

        exps = self.read_floats(config, "SPECTRAL", "exceptional_exponents")
        if exps is None or not all(0 < s_k < rho for s_k in exps):
            self.report(diagnostics, "E011", rule,
                        f"exceptional exponents must lie in (0, {rho})")

        t_grid = self.read_floats(config, "SPECTRAL", "t_grid")
        if not t_grid or any(t < 0 for t in t_grid):
            self.report(diagnostics, "E011", rule,
                        "t_grid needs at least one value t >= 0")

        decay = self.read_number(config, "SPECTRAL", "decay_constant")
        if decay is None or decay <= 0:
            self.report(diagnostics, "E011", rule,
                        "SPECTRAL.decay_constant must be a positive number")

    def run_config_rules(self, config: ConfigParser) -> List[Diagnostic]:
        """Runs every contract rule against a config."""
        diagnostics: List[Diagnostic] = []

        self.seed_rule(config, diagnostics)
        self.experiment_rule(config, diagnostics)
        self.lattice_rule(config, diagnostics)
        self.flow_rule(config, diagnostics)
        self.schedule_rule(config, diagnostics)
        self.loglaw_rule(config, diagnostics)
        self.window_rule(config, diagnostics)
        self.counts_rule(config, diagnostics)
        self.rank_rule(config, diagnostics)
        self.output_rule(config, diagnostics)
        self.spectral_rule(config, diagnostics)

        return diagnostics
