"""CSV and JSON-lines writers for experiment results."""

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
import math
import os

from typing import Any, Dict, List

import numpy as np

from hypshrink.errors import ConfigurationError
from hypshrink.geometry.types import ExperimentResult

SCHEMAS = {
    "orbit": ["sample_id", "m", "x1", "x2", "height", "cusp_height"],
    "loglaw": [
        "sample_id", "cusp_ratio", "ball_ratio", "flagged", "outlier",
        "cusp_count_ratio", "ball_count_ratio", "tau_ball_ratio",
        "tau_cusp_ratio",
    ],
    "hits": [
        "sample_id", "m", "frozen_count", "diag_count", "frozen_ratio",
        "sbc_ratio", "late_diag_hits", "d_ball", "d_cusp",
    ],
    "ah": ["sample_id", "always_hit", "first_miss"],
    "met": [
        "m", "norm", "norm_stderr", "atypical_fraction", "empty_fraction",
        "mean_beta",
    ],
    "qi": ["sample_id", "s_m", "e_m", "discrepancy"],
    "spherical": ["s_real", "s_imag", "t", "value_real", "value_imag"],
    "sample": ["sample_id", "x1", "x2", "height"],
    "measure": ["m", "exact", "estimate", "stderr", "z_score"],
}

FORMATS = ("csv", "jsonl")
OUTPUT_DIR_ENV = "HYPSHRINK_OUTPUT_DIR"


class ResultWriter:
    """Writes the data, aggregate and metadata files of one experiment."""

    def __init__(self, path: str = "", fmt: str = "csv"):
        if fmt not in FORMATS:
            raise ConfigurationError(
                f"output format {fmt} not supported; expected one of "
                f"{FORMATS}")

        self.path = path
        self.fmt = fmt

    def paths(self, experiment: str) -> Dict[str, str]:
        """Data, aggregate and meta file paths for an experiment."""
        path = self.path
        if not path:
            out_dir = os.environ.get(OUTPUT_DIR_ENV, ".")
            path = os.path.join(out_dir, f"{experiment}.{self.fmt}")

        stem, ext = os.path.splitext(path)
        ext = ext or f".{self.fmt}"

        return {
            "data": stem + ext,
            "aggregate": f"{stem}_aggregate{ext}",
            "meta": f"{stem}.meta.json",
        }

    @staticmethod
    def clean_value(value: Any) -> Any:
        """Python scalars for output; non-finite floats become sentinels."""
        if isinstance(value, (np.bool_, bool)):
            return bool(value)

        if isinstance(value, (np.integer,)):
            return int(value)

        if isinstance(value, (np.floating, float)):
            value = float(value)
            if math.isnan(value):
                return "nan"

            if math.isinf(value):
                return "inf" if value > 0 else "-inf"

            return value

        if value is None:
            return ""

        return value

    def _write_rows(self, path: str, columns: List[str], rows: List[Dict]):
        with open(path, "w", encoding="UTF-8", newline="") as outfile:
            if self.fmt == "csv":
                writer = csv.DictWriter(
                    outfile, fieldnames=columns, quoting=csv.QUOTE_MINIMAL,
                    lineterminator="\n")
                writer.writeheader()
                for row in rows:
                    writer.writerow({
                        col: self.clean_value(row.get(col)) for col in columns
                    })
            else:
                for row in rows:
                    clean = {col: self.clean_value(row.get(col))
                             for col in columns}
                    outfile.write(json.dumps(clean) + "\n")

    def write(self, result: ExperimentResult) -> Dict[str, str]:
        paths = self.paths(result.experiment)
        out_dir = os.path.dirname(paths["data"])
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

        self._write_rows(paths["data"], result.columns, result.rows)

        agg_columns = list(result.aggregate)
        self._write_rows(paths["aggregate"], agg_columns, [result.aggregate])

        meta = {
            "experiment": result.experiment,
            "config_hash": result.config_hash,
            "seed": result.seed,
            "columns": result.columns,
            "runtime": {
                key: self.clean_value(val)
                for key, val in result.runtime.items()
            },
        }
        with open(paths["meta"], "w", encoding="UTF-8") as meta_outfile:
            json.dump(meta, meta_outfile, indent=2, sort_keys=True)

        return paths
