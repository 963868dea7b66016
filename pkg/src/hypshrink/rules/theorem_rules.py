"""Hypothesis rules: warnings when a run leaves a theorem's regime."""

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

from configparser import ConfigParser
from typing import Any, Dict, List

import numpy as np

from hypshrink.common import Common
from hypshrink.errors import HypShrinkError
from hypshrink.geometry.spectral import Spectral
from hypshrink.geometry.targets import Targets
from hypshrink.geometry.types import BALL, Diagnostic, MODULAR, UNIPOTENT
from hypshrink.rules.logger import DiagnosticsLogger

logger = logging.getLogger(__name__)

DOUBLING_LIMIT = 16.0
TARGET_EXPERIMENTS = ("hits", "ah", "met", "qi", "measure")

WARNINGS = {
    "W101": "n2-unipotent-hits",
    "W102": "empty-intersection-regime",
    "W103": "critical-eta",
    "W104": "bounded-m-mu",
    "W105": "summability-fails",
    "W106": "doubling-fails",
    "W107": "unbounded-m-mu-qi",
    "W108": "exceptional-degrades-kappa",
    "W109": "n2-unipotent-ah",
    "W110": "ball-above-injectivity",
}


class TheoremRules:
    """Theorem hypothesis Rules and Definitions."""
    def __init__(
            self,
            console,
            disable_map: Dict[str, Any]):

        self.console = console
        self.disable_map = disable_map
        self.log = DiagnosticsLogger(console=console)

    def enabled(self, code: str) -> bool:
        return self.disable_map.get(code, True) and self.disable_map.get(
            WARNINGS[code], True)

    def report(
        self, diagnostics: List[Diagnostic], code: str, title: str,
        message: str
    ):
        if not self.enabled(code):
            return

        diag = Diagnostic(code, title, message, severity="warning")
        diagnostics.append(diag)
        self.log.generic_logger(diag)

    @staticmethod
    def effective_eta(config: ConfigParser) -> float:
        """Exponent eta with mu(B_m) comparable to m^-eta."""
        section = config["TARGET"]
        schedule = section["schedule"].strip()
        n = 2 if config["LATTICE"]["name"].strip() == MODULAR else 3

        if schedule == "measure":
            return float(section["eta"])

        if schedule == "power":
            # mu of a ball of radius r ~ r^n, of a cusp above Y ~ Y^(1 - n)
            factor = n if section["kind"].strip() == BALL else n - 1

            return factor * float(section["eta"])

        if schedule == "loglaw":
            return 1 + int(section["sign"]) * float(section["epsilon"])

        return 0.0

    @staticmethod
    def rank(config: ConfigParser) -> int:
        if config["FLOW"]["kind"].strip() == UNIPOTENT:
            return int(config["FLOW"]["rank"])

        return 1

    # n2-unipotent-hits, n2-unipotent-ah
    def dimension_rule(
        self, config: ConfigParser, kind: str, diagnostics: List[Diagnostic]
    ):
        modular = config["LATTICE"]["name"].strip() == MODULAR
        unipotent = config["FLOW"]["kind"].strip() == UNIPOTENT

        if not (modular and unipotent):
            return

        if kind == "hits":
            self.report(
                diagnostics, "W101", "Unipotent Flow on a Surface",
                "the hit count asymptotic is stated for n >= 3; when n = 2 "
                "the limit still holds only under a stronger assumption on "
                "the targets")

        if kind == "ah":
            self.report(
                diagnostics, "W109", "Unipotent Flow on a Surface",
                "eventually always hitting is stated for n >= 3; on the "
                "modular surface the unipotent orbit equidistributes too "
                "slowly for the dyadic window argument")

    # empty-intersection-regime, critical-eta, bounded-m-mu
    def hits_rule(
        self, config: ConfigParser, eta: float, rank: int,
        diagnostics: List[Diagnostic]
    ):
        if eta > rank:
            self.report(
                diagnostics, "W102", "Empty Intersection Regime",
                f"eta = {eta:g} > {rank}: xH+_m misses B_m for all large m "
                f"for almost every x, so frozen counts tend to 0")

        if eta == rank:
            self.report(
                diagnostics, "W103", "Critical Exponent",
                f"eta = {eta:g} sits on the boundary between the hitting "
                f"and empty regimes; counts stay bounded")

        if eta >= rank:
            self.report(
                diagnostics, "W104", "Bounded m^d mu(B_m)",
                "the subsequence asymptotic for frozen counts needs "
                "m^d mu(B_m) unbounded; frozen ratios are not expected to "
                "settle")

    # summability-fails
    def summability_rule(
        self, eta: float, rank: int, diagnostics: List[Diagnostic]
    ):
        if eta >= rank:
            self.report(
                diagnostics, "W105", "Summability Fails",
                "sum over j of 1/(2^(jd) mu(B_(2^j))) diverges, so almost "
                "every sample is expected to miss some B_m; the always hit "
                "fraction should decay with the horizon")

    # doubling-fails
    def doubling_rule(
        self, config: ConfigParser, diagnostics: List[Diagnostic]
    ):
        try:
            lat = Common.load_lattice(config)
            fam = Common.load_target(config, lat, Common.load_center(
                config, lat))
            m_max = max(config.getint("EXPERIMENT", "m_max"),
                        config.getint("EXPERIMENT", "m_hi"))
            dyadic = np.array(Common.dyadic_grid(m_max)[:-1] or [1])
            measures = Targets.measure_series(
                fam, np.append(dyadic, 2 * dyadic[-1]),
                injectivity_threshold=float(
                    config["NUMERICS"]["injectivity_threshold"]))
        except HypShrinkError as err:
            logger.debug("doubling check skipped: %s", err)
            return

        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = measures[:-1] / measures[1:]

        worst = float(np.nanmax(ratios)) if ratios.size else 1.0
        if not np.all(measures > 0) or worst > DOUBLING_LIMIT:
            self.report(
                diagnostics, "W106", "Doubling Fails",
                f"mu(B_(2^j)) / mu(B_(2^(j+1))) reaches {worst:.3g} > "
                f"{DOUBLING_LIMIT:g} on the dyadic grid")

    # unbounded-m-mu-qi
    def qi_rule(self, eta: float, diagnostics: List[Diagnostic]):
        if eta < 1:
            self.report(
                diagnostics, "W107", "Unbounded m mu(B_m)",
                f"eta = {eta:g} < 1: the quasi-independence bound assumes "
                f"m mu(B_m) uniformly bounded")

    # exceptional-degrades-kappa
    def kappa_rule(
        self, config: ConfigParser, diagnostics: List[Diagnostic]
    ):
        try:
            lat = Common.load_lattice(config)
            spec = Common.load_flow(config, lat)
            spectral = Common.load_spectral(config, lat.model.n)
        except HypShrinkError:
            return

        if spec.kind != UNIPOTENT or not spectral.exceptional_exponents:
            return

        kappa = Spectral.predicted_kappa(spec, spectral)
        clean = spec.rank / 2
        if kappa < clean:
            self.report(
                diagnostics, "W108", "Exceptional Exponents Degrade Kappa",
                f"predicted mean ergodic exponent drops to {kappa:.3g} "
                f"from {clean:g}")

    # ball-above-injectivity
    def injectivity_rule(
        self, config: ConfigParser, diagnostics: List[Diagnostic]
    ):
        if config["TARGET"]["kind"].strip() != BALL:
            return

        try:
            lat = Common.load_lattice(config)
            fam = Common.load_target(config, lat, Common.load_center(
                config, lat))
            radius = Targets.schedule_value(fam, 1)
            limit = min(float(config["NUMERICS"]["injectivity_threshold"]),
                        Targets.center_injectivity(fam))
        except HypShrinkError:
            return

        if radius > limit:
            self.report(
                diagnostics, "W110", "Ball Radius Above Injectivity",
                f"r(1) = {radius:.4f} > {limit:.4f}; measures of large balls "
                f"fall back to Monte Carlo estimates")

    def run_theorem_rules(
        self, config: ConfigParser
    ) -> List[Diagnostic]:
        """Runs every hypothesis rule for the configured experiment.

        Assumes the config already passed the contract rules."""
        diagnostics: List[Diagnostic] = []
        kind = config["EXPERIMENT"]["kind"].strip()
        eta = self.effective_eta(config)
        rank = self.rank(config)

        self.dimension_rule(config, kind, diagnostics)

        if kind == "hits":
            self.hits_rule(config, eta, rank, diagnostics)

        if kind == "ah":
            self.summability_rule(eta, rank, diagnostics)

        if kind in ("hits", "ah"):
            self.doubling_rule(config, diagnostics)

        if kind == "qi":
            self.qi_rule(eta, diagnostics)

        if kind == "met":
            self.kappa_rule(config, diagnostics)

        if kind in TARGET_EXPERIMENTS:
            self.injectivity_rule(config, diagnostics)

        return diagnostics
