"""Common logger for validation diagnostics."""

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

from typing import List

from hypshrink.geometry.types import Diagnostic


class DiagnosticsLogger:
    """Common Logger for Rules output."""
    def __init__(
            self,
            console):

        self.console = console

    @staticmethod
    def format_diagnostic(diag: Diagnostic) -> str:
        style = "bold red" if diag.severity == "error" else "yellow"

        return f"[{style}]{diag.code}[/{style}]: {diag.title} : {diag.message}"

    def generic_logger(self, diag: Diagnostic) -> None:
        """Generic Logger for a single diagnostic."""
        self.console.log(self.format_diagnostic(diag))

    def summary(self, diagnostics: List[Diagnostic]) -> None:
        errors = sum(1 for d in diagnostics if d.severity == "error")
        warnings = len(diagnostics) - errors
        header = "-" * 20

        self.console.log(
            f"\n{header}\n{errors} errors and {warnings} warnings found.\n")
