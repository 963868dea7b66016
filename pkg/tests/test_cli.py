"""Tests for the HypShrink class and the command line."""

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


import json

import pytest

from hypshrink import cli
from hypshrink.errors import ConfigurationError, InvalidArgumentError
from hypshrink.hypshrink import HypShrink


def sample_args(tmp_path, name, *extra):
    return [
        "run", "--seed", "11", "--set", "EXPERIMENT.kind=sample",
        "--set", "EXPERIMENT.samples=24", "--output",
        str(tmp_path / name), "--quiet", *extra,
    ]


def test_validate_needs_seed():
    assert cli.main(["validate"]) == cli.EXIT_CONFIG
    assert cli.main(["validate", "--seed", "3"]) == cli.EXIT_OK


def test_validate_reads_config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[EXPERIMENT]\nseed = 3\nkind = qi\n", encoding="UTF-8")

    assert cli.main(["validate", str(path)]) == cli.EXIT_OK
    assert cli.main(["validate", str(tmp_path / "missing.ini")]) == (
        cli.EXIT_CONFIG)


def test_run_writes_files(tmp_path):
    assert cli.main(sample_args(tmp_path, "sample.csv")) == cli.EXIT_OK

    assert (tmp_path / "sample.csv").exists()
    assert (tmp_path / "sample_aggregate.csv").exists()
    meta = json.loads((tmp_path / "sample.meta.json").read_text("UTF-8"))
    assert meta["seed"] == 11
    assert meta["experiment"] == "sample"
    assert meta["runtime"]["rows"] == 24


def test_run_is_reproducible(tmp_path):
    assert cli.main(sample_args(tmp_path, "a.csv")) == cli.EXIT_OK
    assert cli.main(sample_args(
        tmp_path, "b.csv", "--workers", "2")) == cli.EXIT_OK

    assert (tmp_path / "a.csv").read_bytes() == (
        tmp_path / "b.csv").read_bytes()

    meta_a = json.loads((tmp_path / "a.meta.json").read_text("UTF-8"))
    meta_b = json.loads((tmp_path / "b.meta.json").read_text("UTF-8"))
    assert meta_a["config_hash"] == meta_b["config_hash"]


def test_run_jsonl(tmp_path):
    args = sample_args(tmp_path, "sample.jsonl", "--format", "jsonl")

    assert cli.main(args) == cli.EXIT_OK
    lines = (tmp_path / "sample.jsonl").read_text("UTF-8").splitlines()
    assert len(lines) == 24
    assert set(json.loads(lines[0])) == {"sample_id", "x1", "x2", "height"}


def test_bad_override_exits_with_config_code(tmp_path):
    assert cli.main(sample_args(
        tmp_path, "x.csv", "--set", "EXPERIMENT.speed=3")) == cli.EXIT_CONFIG
    assert cli.main(sample_args(
        tmp_path, "x.csv", "--set", "speed")) == cli.EXIT_CONFIG


def test_config_errors_stop_run(tmp_path):
    args = sample_args(tmp_path, "x.csv", "--set", "TARGET.epsilon=1")

    assert cli.main(args) == cli.EXIT_CONFIG
    assert not (tmp_path / "x.csv").exists()


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    def fail(self, kind):
        raise InvalidArgumentError("mean ergodic experiment needs mu(f) > 0")

    monkeypatch.setattr("hypshrink.hypshrink.Experiments.run", fail)

    assert cli.main(sample_args(tmp_path, "x.csv")) == cli.EXIT_NUMERIC


def test_keyword_arguments_override_set_flags():
    hyp = HypShrink(overrides=["EXPERIMENT.seed=1"], seed=5, samples=9,
                    lattice="picard", disable_rules=["W102", "W104"])

    assert hyp.config["EXPERIMENT"]["seed"] == "5"
    assert hyp.config["EXPERIMENT"]["samples"] == "9"
    assert hyp.config["LATTICE"]["name"] == "picard"
    assert hyp.config["MESSAGES CONTROL"]["disable"] == "W102,W104"


def test_apply_override_errors():
    hyp = HypShrink(seed=1)

    with pytest.raises(ConfigurationError):
        hyp.apply_override("NOWHERE.seed=2")

    with pytest.raises(ConfigurationError):
        hyp.apply_override("EXPERIMENT.seed")

    hyp.apply_override("MESSAGES CONTROL.disable = W110")
    assert hyp.config["MESSAGES CONTROL"]["disable"] == "W110"


def test_transform_list_to_str():
    assert HypShrink.transform_list_to_str(["a", 2]) == "a,2"
    assert HypShrink.transform_list_to_str(0.5) == "0.5"

    with pytest.raises(TypeError):
        HypShrink.transform_list_to_str(True)

    with pytest.raises(TypeError):
        HypShrink.transform_list_to_str({"a": 1})


def test_validate_returns_warnings():
    hyp = HypShrink(seed=1, experiment="hits", verbose=False)
    hyp.update_config("TARGET", {"eta": 1.5})

    found = [d.code for d in hyp.validate()]

    assert "W102" in found
    assert not any(code.startswith("E") for code in found)
