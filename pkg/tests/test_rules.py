"""Tests for config contract rules and hypothesis warnings."""

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

from rich.console import Console

from hypshrink.common import Common
from hypshrink.rules.config_rules import ConfigRules
from hypshrink.rules.theorem_rules import TheoremRules


@pytest.fixture
def console():
    return Console(record=True, log_time=False, log_path=False)


def diagnose(config, console):
    diagnostics = ConfigRules(console).run_config_rules(config)
    if any(d.severity == "error" for d in diagnostics):
        return diagnostics

    disable_map = Common.load_message_controls(config)

    return diagnostics + TheoremRules(console, disable_map).run_theorem_rules(
        config)


def codes(diagnostics):
    return [d.code for d in diagnostics]


def test_default_config_is_clean(config, console):
    assert diagnose(config, console) == []


def test_missing_seed(console):
    diagnostics = diagnose(Common.load_default_config(), console)

    assert codes(diagnostics) == ["E001"]
    assert diagnostics[0].severity == "error"


@pytest.mark.parametrize(
    "section, key, value, code",
    [
        ("EXPERIMENT", "seed", "-1", "E001"),
        ("EXPERIMENT", "seed", str(2 ** 64), "E001"),
        ("EXPERIMENT", "kind", "everything", "E002"),
        ("LATTICE", "name", "hurwitz", "E003"),
        ("LATTICE", "center", "0,1", "E003"),
        ("FLOW", "step", "0", "E004"),
        ("FLOW", "kind", "horospherical", "E004"),
        ("TARGET", "epsilon", "1", "E005"),
        ("TARGET", "cap", "1.5", "E005"),
        ("TARGET", "sign", "2", "E005"),
        ("EXPERIMENT", "m_max", "999", "E006"),
        ("EXPERIMENT", "m_grid", "1,4,2", "E007"),
        ("EXPERIMENT", "samples", "0", "E008"),
        ("OUTPUT", "format", "parquet", "E010"),
        ("SPECTRAL", "s", "2.0", "E011"),
        ("SPECTRAL", "exceptional_exponents", "1.5", "E011"),
        ("SPECTRAL", "decay_constant", "0", "E011"),
    ],
)
def test_config_errors(config, console, section, key, value, code):
    config.set(section, key, value)

    assert code in codes(diagnose(config, console))


def test_window_errors(config, console):
    config.set("EXPERIMENT", "kind", "ah")
    config.set("EXPERIMENT", "m_lo", "100")
    config.set("EXPERIMENT", "m_hi", "10")

    assert "E007" in codes(diagnose(config, console))

    config.set("EXPERIMENT", "kind", "qi")
    config.set("EXPERIMENT", "window_start", "50")
    config.set("EXPERIMENT", "window_end", "50")

    assert "E007" in codes(diagnose(config, console))


def test_unipotent_rank_errors(config, console):
    config.set("FLOW", "kind", "unipotent")
    config.set("FLOW", "rank", "2")

    assert "E009" in codes(diagnose(config, console))

    config.set("LATTICE", "name", "picard")
    config.set("FLOW", "basis", "1,0;2,0")

    assert "E009" in codes(diagnose(config, console))


def test_errors_suppress_warnings(config, console):
    config.set("EXPERIMENT", "kind", "hits")
    config.set("EXPERIMENT", "seed", "")
    config.set("TARGET", "eta", "1.5")

    assert codes(diagnose(config, console)) == ["E001"]


def test_empty_intersection_regime(config, console):
    config.set("EXPERIMENT", "kind", "hits")
    config.set("TARGET", "eta", "1.5")

    found = codes(diagnose(config, console))

    assert "W102" in found
    assert "W104" in found
    assert "W103" not in found
    assert all(code.startswith("W") for code in found)


def test_critical_eta(config, console):
    config.set("EXPERIMENT", "kind", "hits")
    config.set("TARGET", "eta", "1.0")

    found = codes(diagnose(config, console))

    assert "W103" in found
    assert "W102" not in found


def test_power_cusp_eta_scales_with_dimension(config):
    config.set("TARGET", "kind", "cusp")
    config.set("TARGET", "schedule", "power")
    config.set("TARGET", "eta", "0.5")
    assert TheoremRules.effective_eta(config) == 0.5

    config.set("LATTICE", "name", "picard")
    assert TheoremRules.effective_eta(config) == 1.0

    config.set("TARGET", "kind", "ball")
    assert TheoremRules.effective_eta(config) == 1.5


def test_loglaw_eta(config):
    config.set("TARGET", "schedule", "loglaw")
    config.set("TARGET", "epsilon", "0.25")
    config.set("TARGET", "sign", "-1")

    assert TheoremRules.effective_eta(config) == 0.75


def test_unipotent_on_modular_surface(config, console):
    config.set("EXPERIMENT", "kind", "hits")
    config.set("FLOW", "kind", "unipotent")

    assert "W101" in codes(diagnose(config, console))

    config.set("EXPERIMENT", "kind", "ah")

    assert "W109" in codes(diagnose(config, console))


def test_summability_fails(config, console):
    config.set("EXPERIMENT", "kind", "ah")
    config.set("TARGET", "eta", "1.0")

    assert "W105" in codes(diagnose(config, console))

    config.set("TARGET", "eta", "0.5")

    assert "W105" not in codes(diagnose(config, console))


def test_doubling_fails(config, console):
    config.set("EXPERIMENT", "kind", "hits")
    config.set("TARGET", "kind", "cusp")
    config.set("TARGET", "eta", "5.0")

    assert "W106" in codes(diagnose(config, console))


def test_quasi_independence_needs_summable_measures(config, console):
    config.set("EXPERIMENT", "kind", "qi")

    assert "W107" in codes(diagnose(config, console))

    config.set("TARGET", "eta", "1.0")

    assert "W107" not in codes(diagnose(config, console))


def test_exceptional_exponents_degrade_kappa(config, console):
    config.set("EXPERIMENT", "kind", "met")
    config.set("LATTICE", "name", "picard")
    config.set("FLOW", "kind", "unipotent")
    config.set("FLOW", "rank", "2")
    config.set("SPECTRAL", "exceptional_exponents", "0.8")

    assert "W108" in codes(diagnose(config, console))

    config.set("FLOW", "rank", "1")
    config.set("SPECTRAL", "exceptional_exponents", "0.1")

    assert "W108" not in codes(diagnose(config, console))


def test_large_ball_above_injectivity(config, console):
    config.set("EXPERIMENT", "kind", "measure")
    config.set("TARGET", "schedule", "constant")
    config.set("TARGET", "radius", "0.5")

    assert "W110" in codes(diagnose(config, console))

    config.set("TARGET", "radius", "0.05")

    assert "W110" not in codes(diagnose(config, console))


@pytest.mark.parametrize("disable", ["W102", "empty-intersection-regime"])
def test_disable_warning(config, console, disable):
    config.set("EXPERIMENT", "kind", "hits")
    config.set("TARGET", "eta", "1.5")
    config.set("MESSAGES CONTROL", "disable", disable)

    found = codes(diagnose(config, console))

    assert "W102" not in found
    assert "W104" in found


def test_errors_cannot_be_disabled(console):
    config = Common.load_default_config()
    config.set("MESSAGES CONTROL", "disable", "E001")

    assert codes(diagnose(config, console)) == ["E001"]


def test_diagnostics_are_logged(config, console):
    config.set("EXPERIMENT", "kind", "hits")
    config.set("TARGET", "eta", "1.5")

    diagnose(config, console)

    assert "W102" in console.export_text()
