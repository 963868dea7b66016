"""Tests for result files."""

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


import csv
import json

import numpy as np
import pytest

from hypshrink.errors import ConfigurationError
from hypshrink.geometry.types import ExperimentResult
from hypshrink.results import OUTPUT_DIR_ENV, SCHEMAS, ResultWriter


@pytest.fixture
def result():
    return ExperimentResult(
        experiment="ah",
        config_hash="0123456789abcdef",
        seed=42,
        columns=SCHEMAS["ah"],
        rows=[
            {"sample_id": 0, "always_hit": np.bool_(True),
             "first_miss": np.int64(0)},
            {"sample_id": 1, "always_hit": np.bool_(False),
             "first_miss": np.int64(17)},
        ],
        aggregate={"fraction": 0.5, "ratio": float("inf"),
                   "kappa_hat": None},
        runtime={"elapsed_seconds": 0.1, "workers": 2, "rows": 2},
    )


def test_unknown_format():
    with pytest.raises(ConfigurationError):
        ResultWriter("out.parquet", "parquet")


def test_clean_value():
    assert ResultWriter.clean_value(np.float64("nan")) == "nan"
    assert ResultWriter.clean_value(float("-inf")) == "-inf"
    assert ResultWriter.clean_value(np.int32(3)) == 3
    assert ResultWriter.clean_value(np.bool_(False)) is False
    assert ResultWriter.clean_value(None) == ""


def test_csv_files(tmp_path, result):
    paths = ResultWriter(str(tmp_path / "ah.csv"), "csv").write(result)

    with open(paths["data"], encoding="UTF-8") as infile:
        rows = list(csv.reader(infile))
    assert rows[0] == SCHEMAS["ah"]
    assert rows[2] == ["1", "False", "17"]

    with open(paths["aggregate"], encoding="UTF-8") as infile:
        aggregate = list(csv.DictReader(infile))
    assert aggregate == [{"fraction": "0.5", "ratio": "inf",
                          "kappa_hat": ""}]

    with open(paths["meta"], encoding="UTF-8") as infile:
        meta = json.load(infile)
    assert meta["config_hash"] == "0123456789abcdef"
    assert meta["seed"] == 42
    assert meta["columns"] == SCHEMAS["ah"]
    assert meta["runtime"]["workers"] == 2


def test_jsonl_files(tmp_path, result):
    paths = ResultWriter(str(tmp_path / "run"), "jsonl").write(result)

    assert paths["data"].endswith("run.jsonl")
    with open(paths["data"], encoding="UTF-8") as infile:
        lines = [json.loads(line) for line in infile]
    assert lines[1] == {"sample_id": 1, "always_hit": False, "first_miss": 17}


def test_default_paths_use_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))

    paths = ResultWriter("", "csv").paths("qi")

    assert paths == {
        "data": str(tmp_path / "qi.csv"),
        "aggregate": str(tmp_path / "qi_aggregate.csv"),
        "meta": str(tmp_path / "qi.meta.json"),
    }
