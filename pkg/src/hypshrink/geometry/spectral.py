"""Spherical functions of SO(n,1) and their decay envelopes."""

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
import math
import warnings

from typing import List, Sequence

import numpy as np

from scipy import integrate, special, stats

from hypshrink.errors import InvalidArgumentError, PrecisionError
from hypshrink.geometry.types import (
    DIAGONALIZABLE,
    EnvelopeFit,
    FlowSpec,
    SpectralConfig,
    SphericalPoint,
)

logger = logging.getLogger(__name__)

REL_TOL = 1e-8
QUAD_LIMIT = 400


class Spectral:
    """Spherical function evaluation and decay diagnostics."""

    @staticmethod
    def check_parameter(s: complex, n: int):
        rho = (n - 1) / 2
        s = complex(s)

        if n < 2:
            raise InvalidArgumentError(f"dimension n={n} must be >= 2")

        if not -1e-12 <= s.real <= rho + 1e-12:
            raise InvalidArgumentError(
                f"spectral parameter {s} needs 0 <= Re s <= rho = {rho}")

        if s.real > 0 and abs(s.imag) > 0:
            raise InvalidArgumentError(
                f"spectral parameter {s} must be real or purely imaginary")

    @staticmethod
    def _integrand(v, t, exponent, a, phase):
        """Integrand after u = cos(theta) and v = ln(cosh t + u sinh t).

        The factor ((v + t)(t - v))^a is carried by the quadrature weight."""
        core = math.exp(v - t) * special.exprel(v + t) * special.exprel(t - v)
        val = math.exp(v * exponent) * core ** a / math.sinh(t) ** (2 * a + 1)

        if phase is None:
            return val

        return val * phase(v)

    @staticmethod
    def _quad(t, exponent, a, phase=None, epsabs=0.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(
                Spectral._integrand, -t, t,
                args=(t, exponent, a, phase),
                weight="alg", wvar=(a, a),
                epsabs=epsabs, epsrel=REL_TOL / 10, limit=QUAD_LIMIT)

        return val, err

    @staticmethod
    def spherical_fn(s: complex, t: float, n: int) -> complex:
        """phi_s(a_t), normalized so that phi_s(a_0) = 1."""
        Spectral.check_parameter(s, n)
        if t < 0 or not math.isfinite(t):
            raise InvalidArgumentError(f"t={t} must be finite and >= 0")

        if t == 0:
            return complex(1.0)

        s = complex(s)
        rho = (n - 1) / 2
        a = (n - 3) / 2
        norm = special.beta(0.5, a + 1)
        exponent = s.real - rho + 1

        envelope, env_err = Spectral._quad(t, exponent, a)

        if s.imag == 0:
            real_part, err = envelope, env_err
            imag_part, imag_err = 0.0, 0.0
        else:
            lam = s.imag
            epsabs = REL_TOL * envelope / 10
            real_part, err = Spectral._quad(
                t, exponent, a, lambda v: math.cos(lam * v), epsabs)
            imag_part, imag_err = Spectral._quad(
                t, exponent, a, lambda v: math.sin(lam * v), epsabs)

        # |phi_s| <= phi_{Re s}, so errors are measured against the envelope
        achieved = (err + imag_err) / envelope
        if not math.isfinite(achieved) or achieved > REL_TOL:
            raise PrecisionError(
                f"spherical function quadrature at s={s}, t={t}, n={n} "
                f"reached relative error {achieved:.3e}", achieved)

        return complex(real_part / norm, imag_part / norm)

    @staticmethod
    def closed_form_n3(s: complex, t: float) -> complex:
        """sinh(st)/(s sinh t) on hyperbolic 3-space; t/sinh t at s = 0."""
        s = complex(s)
        if t == 0:
            return complex(1.0)

        if s == 0:
            return complex(t / math.sinh(t))

        return complex(np.sinh(s * t) / (s * math.sinh(t)))

    @staticmethod
    def spherical_points(
        s: complex, t_grid: Sequence[float], n: int
    ) -> List[SphericalPoint]:
        return [
            SphericalPoint(complex(s), float(t),
                           Spectral.spherical_fn(s, float(t), n))
            for t in t_grid
        ]

    @staticmethod
    def decay_envelope_check(
        s: complex, t_grid: Sequence[float], n: int,
        decay_constant: float = 1.0,
    ) -> EnvelopeFit:
        """Fits log|phi_s| against t, or bounds |phi_s| e^(rho t)/t.

        envelope_ratio is the worst grid value of |phi_s| over the assumed
        bound decay_constant * e^((s - rho) t), or decay_constant *
        t e^(-rho t) off the complementary series; at most 1 means the bound
        holds."""
        t_arr = np.asarray(t_grid, dtype=np.float64)
        if t_arr.size < 2 or t_arr.min() < 1 or t_arr.max() > 40:
            raise InvalidArgumentError(
                "decay checks need at least two grid points in [1, 40]")

        if not decay_constant > 0:
            raise InvalidArgumentError(
                f"decay constant must be positive, got {decay_constant}")

        s = complex(s)
        rho = (n - 1) / 2
        values = np.array([abs(Spectral.spherical_fn(s, t, n)) for t in t_arr])
        fit = EnvelopeFit(s=s, n=n, decay_constant=decay_constant)

        if s.imag == 0 and s.real > 0:
            reg = stats.linregress(t_arr, np.log(values))
            fit.slope = float(reg.slope)
            fit.constant = float(math.exp(reg.intercept))
            bound = np.exp((s.real - rho) * t_arr)
        else:
            fit.envelope_sup = float(
                np.max(values * np.exp(rho * t_arr) / t_arr))
            bound = t_arr * np.exp(-rho * t_arr)

        fit.envelope_ratio = float(np.max(values / (decay_constant * bound)))
        logger.debug("decay envelope of phi_%s: ratio %.4g at C=%g",
                     s, fit.envelope_ratio, decay_constant)

        return fit

    @staticmethod
    def predicted_kappa(
        spec: FlowSpec, spectral: SpectralConfig
    ) -> float:
        """Mean ergodic exponent predicted for a flow.

        Diagonalizable flows decay at rate 1/2. Rank-d unipotent actions with
        d < 2 rho decay at min(d/2, rho - s_k) over the exceptional exponents.
        """
        if spec.kind == DIAGONALIZABLE:
            return 0.5

        rate = spec.rank / 2
        for s_k in spectral.exceptional_exponents:
            rate = min(rate, spectral.rho - s_k)

        return rate
