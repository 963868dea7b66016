"""Exception classes raised throughout hypshrink."""

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


class HypShrinkError(Exception):
    """Base class for every error raised by the library."""


class InvalidArgumentError(HypShrinkError, ValueError):
    """An operation was called outside its documented preconditions."""


class ConfigurationError(HypShrinkError):
    """The experiment configuration cannot be run as given."""


class DriftError(HypShrinkError):
    """A group element drifted too far from its constraint manifold.

    Raised by renormalization when the defect is beyond repair, which means
    the orbit loop must renormalize more often."""

    def __init__(self, defect: float):
        super().__init__(
            f"group defect {defect:.3e} >= 1e-3; lower renorm_cadence"
        )
        self.defect = defect


class ReductionError(HypShrinkError):
    """Fundamental domain reduction did not terminate."""


class PrecisionError(HypShrinkError):
    """Quadrature failed to reach the requested accuracy."""

    def __init__(self, message: str, achieved_error: float):
        super().__init__(f"{message} (achieved error {achieved_error:.3e})")
        self.achieved_error = achieved_error
