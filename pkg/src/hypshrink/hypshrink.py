"""Core class and methods for HypShrink."""

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

from typing import Any, Dict, List, Union

from rich.console import Console
from rich.logging import RichHandler

from hypshrink.common import Common
from hypshrink.errors import ConfigurationError
from hypshrink.geometry.types import Diagnostic, ExperimentResult
from hypshrink.results import ResultWriter
from hypshrink.rules.config_rules import ConfigRules
from hypshrink.rules.logger import DiagnosticsLogger
from hypshrink.rules.theorem_rules import TheoremRules
from hypshrink.stats.experiments import Experiments

console = Console(
    record=True,
    log_time=False,
    log_path=False,
    width=200,
    color_system="truecolor",
)

keywords = [
    "Begin",
    "experiment",
    "errors",
    "warnings",
]
handler = RichHandler(
    enable_link_path=False,
    keywords=keywords,
    show_time=False,
    show_level=False,
    show_path=False,
    tracebacks_word_wrap=False,
)

# logging config
logging.basicConfig(
    level=logging.INFO, format="%(message)s", handlers=[handler], force=True
)


class HypShrink:
    """Core HypShrink methods and functions."""

    def __init__(
        self,
        config_file: str = None,
        overrides: List[str] = None,
        experiment: str = None,
        seed: int = None,
        samples: int = None,
        workers: int = None,
        lattice: str = None,
        m_max: int = None,
        disable_rules: Union[List[str], str] = None,
        output_file: str = None,
        output_format: str = None,
        verbose: bool = True,
    ):
        self.config = Common.load_config(config_file)
        self.verbose = verbose

        for override in overrides or []:
            self.apply_override(override)

        if experiment:
            self.update_config("EXPERIMENT", {"kind": experiment})

        if seed is not None:
            self.update_config("EXPERIMENT", {"seed": seed})

        if samples is not None:
            self.update_config("EXPERIMENT", {"samples": samples})

        if workers is not None:
            self.update_config("EXPERIMENT", {"workers": workers})

        if m_max is not None:
            self.update_config("EXPERIMENT", {"m_max": m_max})

        if lattice:
            self.update_config("LATTICE", {"name": lattice})

        if disable_rules:
            self.update_config("MESSAGES CONTROL", {"disable": disable_rules})

        if output_file:
            self.update_config("OUTPUT", {"path": output_file})

        if output_format:
            self.update_config("OUTPUT", {"format": output_format})

        self.log = DiagnosticsLogger(console)

    @staticmethod
    def transform_list_to_str(data: Union[List[Any], str, int, float]):
        """Determine input data and parse accordingly for config update."""
        res = data

        if isinstance(data, List):
            res = ",".join(str(item) for item in data)

        if isinstance(res, bool):
            raise TypeError("Input must not be a `bool`")

        if isinstance(res, (int, float)):
            res = str(res)

        if not isinstance(res, str):
            raise TypeError(
                "Input must be one of the following formats: `str` | `int` | "
                "`float` | List[`str`]"
            )

        return res

    def update_config(self, section: str, data: Dict[str, Any]):
        """Update the Config based on user provided kwargs."""
        if not self.config.has_section(section):
            raise ConfigurationError(f"unknown config section {section}")

        for key, value in data.items():
            if key not in self.config[section]:
                raise ConfigurationError(f"unknown config key {section}.{key}")

            self.config.set(section, key, self.transform_list_to_str(value))

    def apply_override(self, override: str):
        """Applies one `SECTION.key=value` override."""
        target, sep, value = override.partition("=")
        section, dot, key = target.rpartition(".")

        if not sep or not dot or not key.strip():
            raise ConfigurationError(
                f"override {override} must look like SECTION.key=value")

        self.update_config(section.strip(), {key.strip(): value.strip()})

    def validate(self) -> List[Diagnostic]:
        """Errors for contract violations, then hypothesis warnings."""
        disable_map = Common.load_message_controls(self.config)

        diagnostics = ConfigRules(console).run_config_rules(self.config)
        if not any(d.severity == "error" for d in diagnostics):
            theorem_rules = TheoremRules(console, disable_map)
            diagnostics.extend(theorem_rules.run_theorem_rules(self.config))

        self.log.summary(diagnostics)

        return diagnostics

    def run(self) -> ExperimentResult:
        """Validates, runs the configured experiment and writes its files."""
        diagnostics = self.validate()
        errors = [d for d in diagnostics if d.severity == "error"]
        if errors:
            codes = ", ".join(d.code for d in errors)
            raise ConfigurationError(f"config has errors: {codes}")

        kind = self.config["EXPERIMENT"]["kind"].strip()
        output = self.config["OUTPUT"]
        writer = ResultWriter(output["path"].strip(), output["format"].strip())

        experiments = Experiments(self.verbose, self.config, console)
        result = experiments.run(kind)

        paths = writer.write(result)
        console.log(f"Results written to {paths['data']}")

        console.print_json(data={
            key: writer.clean_value(val)
            for key, val in result.aggregate.items()
        })

        log_file = output["log_file"].strip()
        if log_file:
            console.save_text(log_file)

        return result
