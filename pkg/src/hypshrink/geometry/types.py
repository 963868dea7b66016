"""Collection of Type Classes used for hypshrink."""

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

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from hypshrink.errors import InvalidArgumentError

SL2R = "SL2R"
SL2C = "SL2C"
SON1 = "SOn1"

MODULAR = "modular"
PICARD = "picard"

DIAGONALIZABLE = "diagonalizable"
UNIPOTENT = "unipotent"

BALL = "ball"
CUSP = "cusp"
CUSTOM = "custom"


@dataclass(frozen=True)
class ModelParams:
    """Dimension of hyperbolic space and the matrix model realizing G."""

    n: int
    model: str

    def __post_init__(self):
        if self.n < 2:
            raise InvalidArgumentError(f"dimension n={self.n} must be >= 2")

        if self.model == SL2R and self.n != 2:
            raise InvalidArgumentError("SL2R model requires n = 2")

        if self.model == SL2C and self.n != 3:
            raise InvalidArgumentError("SL2C model requires n = 3")

        if self.model not in (SL2R, SL2C, SON1):
            raise InvalidArgumentError(f"unknown model {self.model}")

    @property
    def rho(self) -> float:
        return (self.n - 1) / 2

    @property
    def size(self) -> int:
        """Matrix size of the model."""
        if self.model == SON1:
            return self.n + 1

        return 2

    @property
    def dtype(self):
        if self.model == SL2C:
            return np.complex128

        return np.float64


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An isometry of hyperbolic n-space in one of the matrix models."""

    entries: np.ndarray
    model: ModelParams

    def __repr__(self):
        return f"GroupElement({self.model.model}, {self.entries.tolist()})"


@dataclass(frozen=True, eq=False)
class IwasawaCoords:
    """Coordinates g = n_x a_t k."""

    x: np.ndarray
    t: float
    k: GroupElement


@dataclass(frozen=True, eq=False)
class CartanCoords:
    """Coordinates g = k1 a_t k2 with t >= 0."""

    k1: GroupElement
    t: float
    k2: GroupElement


@dataclass(frozen=True, eq=False)
class Lattice:
    """A concrete non-cocompact lattice with an exact fundamental domain."""

    name: str
    model: ModelParams
    generators: Dict[str, GroupElement] = field(default_factory=dict)
    relations: List[Tuple[str, ...]] = field(default_factory=list)
    covolume: float = 0.0
    word_radius: int = 2
    domain_floor: float = 0.0  # Minimum height of the fundamental domain
    strip_area: float = 1.0  # Area of the horizontal cross section
    base_point: Tuple[complex, float] = (0j, 1.0)


@dataclass(frozen=True, eq=False)
class QuotientPoint:
    """A lattice-reduced group element, i.e. a point of Gamma \\ G."""

    rep: GroupElement
    lattice: Lattice
    word_log: Tuple[str, ...] = ()

    @property
    def horizontal(self) -> complex:
        """Horizontal coordinate of rep applied to the base point."""
        a, b = self.rep.entries[0]
        c, d = self.rep.entries[1]
        denom = abs(c) ** 2 + abs(d) ** 2

        return complex((a * np.conj(c) + b * np.conj(d)) / denom)

    @property
    def height(self) -> float:
        c, d = self.rep.entries[1]

        return float(1 / (abs(c) ** 2 + abs(d) ** 2))


@dataclass(eq=False)
class RepBatch:
    """Many SL2 representatives stored as four entry arrays."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    lattice: Lattice

    def __len__(self):
        return len(self.a)

    def copy(self) -> "RepBatch":
        return RepBatch(
            self.a.copy(), self.b.copy(), self.c.copy(), self.d.copy(),
            self.lattice)

    def take(self, idx) -> "RepBatch":
        return RepBatch(
            self.a[idx], self.b[idx], self.c[idx], self.d[idx], self.lattice)


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """A discrete one parameter flow or a rank-d unipotent Z^d action."""

    kind: str = DIAGONALIZABLE
    step: float = 1.0
    conjugator: Optional[GroupElement] = None
    basis: Optional[np.ndarray] = None  # shape (d, n - 1)

    @property
    def rank(self) -> int:
        if self.kind == DIAGONALIZABLE:
            return 1

        return int(np.atleast_2d(self.basis).shape[0])


@dataclass(eq=False)
class OrbitCursor:
    """Single-owner cursor walking the orbit x g_m."""

    current: QuotientPoint
    step_index: int = 0
    renorm_cadence: int = 1024


@dataclass(frozen=True)
class PowerSchedule:
    """r(m) = coeff * m^(-exponent); the ball radius schedule."""

    coeff: float = 1.0
    exponent: float = 0.5

    def __call__(self, m: int) -> float:
        return self.coeff * float(m) ** (-self.exponent)


@dataclass(frozen=True)
class LogHeightSchedule:
    """ln Y(m) = slope * ln(m) + offset; the cusp height schedule."""

    slope: float = 1.0
    offset: float = 0.0

    def __call__(self, m: int) -> float:
        return math.exp(self.slope * math.log(m) + self.offset)


@dataclass(frozen=True)
class ConstantSchedule:
    """A frozen target, the same radius or height for every m."""

    value: float = 1.0

    def __call__(self, m: int) -> float:
        return self.value


@dataclass(frozen=True)
class MeasureSchedule:
    """Declares mu(B_m) = min(cap, amplitude * m^(-eta)).

    The family converts the declared measure back to a radius or height."""

    amplitude: float = 0.5
    eta: float = 1.0
    cap: float = 0.5

    def measure(self, m: int) -> float:
        return min(self.cap, self.amplitude * float(m) ** (-self.eta))


Schedule = Union[PowerSchedule, LogHeightSchedule, ConstantSchedule,
                 MeasureSchedule]


@dataclass(frozen=True, eq=False)
class TargetFamily:
    """A shrinking family of spherical targets B_m."""

    kind: str
    lattice: Lattice
    schedule: Optional[Schedule] = None
    center: Optional[QuotientPoint] = None
    membership: Optional[Callable[[QuotientPoint, int], bool]] = None
    measure_schedule: Union[Callable[[int], float], str, None] = None
    spherical: bool = True
    center_images: Optional[np.ndarray] = None  # shape (J, 2): w, h


@dataclass
class MeasureEstimate:
    """A target measure, exact or Monte Carlo with its standard error."""

    value: float
    stderr: float = 0.0
    exact: bool = True


@dataclass
class SamplerStats:
    """Acceptance statistics of a rejection sampler."""

    proposed: int = 0
    accepted: int = 0

    @property
    def acceptance_rate(self) -> float:
        if self.proposed == 0:
            return 1.0

        return self.accepted / self.proposed


@dataclass
class HitRecord:
    """Per sample shrinking target statistics along a grid."""

    sample_id: int
    m_grid: List[int] = field(default_factory=list)
    hit_count_diag: Optional[np.ndarray] = None
    hit_count_frozen: Optional[np.ndarray] = None
    d_ball: Optional[np.ndarray] = None
    d_cusp: Optional[np.ndarray] = None
    tau: Dict[float, float] = field(default_factory=dict)
    late_diag_hits: Optional[np.ndarray] = None  # #{M/2 < m <= M} per grid point


@dataclass
class LogLawEstimate:
    """Per sample log law ratios and their dyadic trend."""

    m_max: int
    m_grid: List[int]
    cusp_ratio: np.ndarray
    ball_ratio: np.ndarray
    cusp_trend: np.ndarray  # shape (samples, grid)
    ball_trend: np.ndarray
    flagged: np.ndarray
    outlier: np.ndarray
    cusp_count_ratio: np.ndarray
    ball_count_ratio: np.ndarray
    tau_ball_ratio: np.ndarray
    tau_cusp_ratio: np.ndarray


@dataclass
class MetEstimate:
    """Mean ergodic norms, fitted exponent and atypical set fractions."""

    m_grid: List[int]
    norm_estimates: np.ndarray
    norm_stderr: np.ndarray
    fitted_slope: Optional[float] = None  # kappa hat
    slope_interval: Optional[Tuple[float, float]] = None
    predicted_kappa: Optional[float] = None
    atypical_fractions: Optional[np.ndarray] = None
    empty_fractions: Optional[np.ndarray] = None
    mean_beta: Optional[np.ndarray] = None
    mean: float = 0.0


@dataclass
class AlwaysHitEstimate:
    """Eventually always hitting statistics over a window [M_lo, M_hi]."""

    m_lo: int
    m_hi: int
    fraction: float
    always_hit: np.ndarray
    first_miss: np.ndarray  # 0 when the sample never misses
    horizons: List[int] = field(default_factory=list)
    horizon_fractions: List[float] = field(default_factory=list)
    window_exponents: List[int] = field(default_factory=list)
    window_miss_fractions: List[float] = field(default_factory=list)


@dataclass
class QiEstimate:
    """Quasi-independence sums over a window [M, N]."""

    window: Tuple[int, int]
    r_matrix: Optional[np.ndarray]
    row_sums: np.ndarray
    abs_sum: float
    mu_sum: float
    ratio: float
    e_m: float
    s_m: np.ndarray
    discrepancy: np.ndarray


@dataclass
class SpectralConfig:
    """Exceptional spectrum hypotheses driving the predicted decay rates."""

    rho: float
    exceptional_exponents: List[float] = field(default_factory=list)
    decay_constant: float = 1.0

    def __post_init__(self):
        if not self.decay_constant > 0:
            raise InvalidArgumentError(
                f"decay constant {self.decay_constant} must be positive")

        for s_k in self.exceptional_exponents:
            if not 0 < s_k < self.rho:
                raise InvalidArgumentError(
                    f"exceptional exponent {s_k} outside (0, {self.rho})")

    @property
    def spectral_gap(self) -> float:
        if not self.exceptional_exponents:
            return self.rho

        return self.rho - max(self.exceptional_exponents)


@dataclass(frozen=True)
class SphericalPoint:
    """A value of the spherical function phi_s at a_t."""

    s: complex
    t: float
    value: complex


@dataclass
class EnvelopeFit:
    """Result of a spherical function decay check."""

    s: complex
    n: int
    slope: Optional[float] = None
    constant: Optional[float] = None
    envelope_sup: Optional[float] = None
    decay_constant: float = 1.0
    envelope_ratio: Optional[float] = None

    @property
    def within_envelope(self) -> Optional[bool]:
        if self.envelope_ratio is None:
            return None

        return self.envelope_ratio <= 1


@dataclass
class Diagnostic:
    """A single validate() finding."""

    code: str
    title: str
    message: str
    severity: str = "warning"  # error | warning


@dataclass
class ExperimentResult:
    """Rows and aggregate of one experiment, with provenance."""

    experiment: str
    config_hash: str
    seed: int
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    aggregate: Dict[str, Any] = field(default_factory=dict)
    runtime: Dict[str, Any] = field(default_factory=dict)
