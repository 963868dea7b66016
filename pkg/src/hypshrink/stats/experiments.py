"""Population experiments over Haar samples and their result rows."""

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
import time

from configparser import ConfigParser
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from rich.console import Console
from scipy import stats

from hypshrink.common import Common
from hypshrink.errors import ConfigurationError, InvalidArgumentError
from hypshrink.geometry.lattice import Lattices
from hypshrink.geometry.spectral import Spectral
from hypshrink.geometry.targets import HaarSampler, Targets
from hypshrink.geometry.types import (
    AlwaysHitEstimate,
    BALL,
    ConstantSchedule,
    ExperimentResult,
    FlowSpec,
    HitRecord,
    LogLawEstimate,
    MetEstimate,
    QiEstimate,
    RepBatch,
    SpectralConfig,
    TargetFamily,
)
from hypshrink.results import SCHEMAS
from hypshrink.stats.estimators import Estimators
from hypshrink.stats.runner import Runner

logger = logging.getLogger(__name__)

Observable = Union[TargetFamily, Callable[[RepBatch], np.ndarray]]

LOGLAW_MIN_HORIZON = 1000
MEASURE_STREAM = 1


class Experiments:
    """Population experiments over Haar samples."""

    def __init__(
        self,
        verbose: bool = False,
        config: Optional[ConfigParser] = None,
        console: Optional[Console] = None,
        runner: Optional[Runner] = None,
    ):
        self.verbose = verbose
        self.config = config or Common.load_default_config()
        self.console = console or Console(
            record=True, log_time=False, log_path=False)
        self.runner = runner or Runner(
            self.config.getint("EXPERIMENT", "workers"))

        numerics = self.config["NUMERICS"]
        self.renorm_cadence = int(numerics["renorm_cadence"])
        self.injectivity_threshold = float(numerics["injectivity_threshold"])
        self.measure_samples = int(numerics["measure_samples"])

        stats_cfg = self.config["STATS"]
        self.quantile = float(stats_cfg["quantile"])
        self.loglaw_c = float(stats_cfg["loglaw_c"])
        self.schmidt_epsilon = float(stats_cfg["schmidt_epsilon"])
        self.outlier_factor = float(stats_cfg["outlier_factor"])
        self.r_grid = Common.parse_float_list(stats_cfg["r_grid"])
        self.depth_grid = Common.parse_float_list(stats_cfg["depth_grid"])
        self.dense_limit = int(stats_cfg["dense_limit"])

    # Library level experiments

    def loglaw_experiment(
        self,
        samples: RepBatch,
        spec: FlowSpec,
        n: int,
        m_max: int,
        center: Optional[TargetFamily] = None,
    ) -> LogLawEstimate:
        """Log law ratios d_m(x, inf)/ln m and -ln d_m(x, x0)/ln m."""
        if m_max < LOGLAW_MIN_HORIZON:
            raise InvalidArgumentError(
                f"log law needs m_max >= {LOGLAW_MIN_HORIZON}, got {m_max}")

        lat = samples.lattice
        if lat.model.n != n:
            raise InvalidArgumentError(
                f"samples live in dimension {lat.model.n}, not {n}")

        radii = np.asarray(self.r_grid, dtype=np.float64)
        depths = np.asarray(self.depth_grid, dtype=np.float64)
        if np.any((radii <= 0) | (radii >= 1)) or np.any(depths <= 0):
            raise InvalidArgumentError(
                "hitting time grids need radii in (0, 1) and depths > 0")

        center = center or Targets.ball(lat, ConstantSchedule(1.0))
        m_grid = Common.dyadic_grid(m_max)
        c = self.loglaw_c

        out = self.runner.map(
            Estimators.loglaw_kernel, samples, spec=spec, center=center,
            m_grid=m_grid, ball_level=m_max ** (-c / n),
            cusp_level=c * math.log(m_max) / (n - 1), r_grid=radii,
            depth_grid=depths, renorm_cadence=self.renorm_cadence)

        logs = np.log(np.asarray(m_grid, dtype=np.float64))
        with np.errstate(divide="ignore", invalid="ignore"):
            cusp_trend = out["d_cusp"] / logs
            ball_trend = -np.log(out["d_ball"]) / logs
        cusp_trend[:, logs == 0] = np.nan
        ball_trend[:, logs == 0] = np.nan

        expected = m_max ** (1 - c)
        cusp_ratio = cusp_trend[:, -1]

        return LogLawEstimate(
            m_max=m_max,
            m_grid=m_grid,
            cusp_ratio=cusp_ratio,
            ball_ratio=ball_trend[:, -1],
            cusp_trend=cusp_trend,
            ball_trend=ball_trend,
            flagged=out["flagged"],
            outlier=cusp_ratio > self.outlier_factor / (n - 1),
            cusp_count_ratio=out["cusp_count"] / expected,
            ball_count_ratio=out["ball_count"] / expected,
            tau_ball_ratio=self.tau_ratios(out["tau_ball"], -np.log(radii)),
            tau_cusp_ratio=self.tau_ratios(out["tau_cusp"], depths),
        )

    @staticmethod
    def tau_ratios(tau: np.ndarray, scale: np.ndarray) -> np.ndarray:
        """log tau / scale at the deepest target each sample reached.

        Deepest means the largest scale with a finite hitting time."""
        hit = np.isfinite(tau)
        masked = np.where(hit, scale[None, :], -np.inf)
        idx = np.argmax(masked, axis=1)
        rows = np.arange(len(tau))
        reached = hit.any(axis=1)

        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.log(tau[rows, idx]) / scale[idx]

        return np.where(reached, ratio, np.nan)

    def hit_counts_experiment(
        self,
        fam: TargetFamily,
        spec: FlowSpec,
        m_grid: Sequence[int],
        samples: RepBatch,
    ) -> List[HitRecord]:
        center = fam if fam.kind == BALL else None
        out = self.runner.map(
            Estimators.hits_kernel, samples, spec=spec, fam=fam,
            m_grid=list(m_grid), center=center,
            renorm_cadence=self.renorm_cadence)

        return Estimators.hit_records(out, m_grid)

    def met_experiment(
        self,
        f: Observable,
        spec: FlowSpec,
        m_grid: Sequence[int],
        samples: RepBatch,
        mean: Optional[float] = None,
        spectral: Optional[SpectralConfig] = None,
        sampler: Optional[HaarSampler] = None,
    ) -> MetEstimate:
        """Mean ergodic norms |beta+_m f - mu(f)|_2 and the fitted exponent.

        A family is read as the indicator of its frozen target B_1."""
        if mean is None:
            if not isinstance(f, TargetFamily):
                raise InvalidArgumentError(
                    "callable observables need their mean mu(f)")

            mean = Targets.measure(
                f, 1, sampler, self.measure_samples,
                self.injectivity_threshold).value

        if not mean > 0:
            raise InvalidArgumentError(
                f"mean ergodic experiment needs mu(f) > 0, got {mean}")

        out = self.runner.map(
            Estimators.beta_kernel, samples, spec=spec, f=f,
            m_grid=list(m_grid), m_eval=1,
            renorm_cadence=self.renorm_cadence)
        beta = out["beta"]
        dev = beta - mean
        sq = dev ** 2
        count = len(samples)

        norms = np.sqrt(sq.mean(axis=0))
        if count > 1:
            ms_err = sq.std(axis=0, ddof=1) / math.sqrt(count)
        else:
            ms_err = np.zeros(len(m_grid))

        with np.errstate(divide="ignore", invalid="ignore"):
            norm_stderr = np.where(norms > 0, ms_err / (2 * norms), 0.0)

        estimate = MetEstimate(
            m_grid=list(m_grid),
            norm_estimates=norms,
            norm_stderr=norm_stderr,
            atypical_fractions=np.mean(np.abs(dev) >= mean / 2, axis=0),
            mean_beta=beta.mean(axis=0),
            mean=float(mean),
        )

        if isinstance(f, TargetFamily):
            estimate.empty_fractions = np.mean(beta == 0, axis=0)

        if spectral is not None:
            estimate.predicted_kappa = Spectral.predicted_kappa(
                spec, spectral)

        self.fit_kappa(estimate)

        return estimate

    @staticmethod
    def fit_kappa(estimate: MetEstimate):
        """kappa hat = -(slope of log norm against log m), with a t-interval.

        Left undefined when fewer than two grid points carry a positive
        norm."""
        norms = estimate.norm_estimates
        m_vals = np.asarray(estimate.m_grid, dtype=np.float64)
        usable = norms > 0

        if usable.sum() < 2:
            return

        reg = stats.linregress(np.log(m_vals[usable]), np.log(norms[usable]))
        estimate.fitted_slope = float(-reg.slope)

        dof = int(usable.sum()) - 2
        if dof >= 1:
            half = float(stats.t.ppf(0.975, dof) * reg.stderr)
            estimate.slope_interval = (
                estimate.fitted_slope - half, estimate.fitted_slope + half)

    def always_hitting_experiment(
        self,
        fam: TargetFamily,
        spec: FlowSpec,
        samples: RepBatch,
        m_lo: int,
        m_hi: int,
    ) -> AlwaysHitEstimate:
        """Fraction of samples with xH+_m meeting B_m for all m in the window.
        """
        if not 1 <= m_lo < m_hi:
            raise InvalidArgumentError(
                f"always hitting window needs 1 <= M_lo < M_hi, got "
                f"[{m_lo}, {m_hi}]")

        out = self.runner.map(
            Estimators.always_hit_kernel, samples, spec=spec, fam=fam,
            m_lo=m_lo, m_hi=m_hi, renorm_cadence=self.renorm_cadence)

        first_miss = out["first_miss"]
        horizons = [h for h in Common.dyadic_grid(m_hi) if h > m_lo]
        exponents = [j for j in range(1, m_hi.bit_length()) if 2 ** j <= m_hi]

        return AlwaysHitEstimate(
            m_lo=m_lo,
            m_hi=m_hi,
            fraction=float(np.mean(out["always_hit"])),
            always_hit=out["always_hit"],
            first_miss=first_miss,
            horizons=horizons,
            horizon_fractions=[
                float(np.mean((first_miss == 0) | (first_miss > h)))
                for h in horizons
            ],
            window_exponents=exponents,
            window_miss_fractions=[
                float(v) for v in np.mean(out["cert_miss"], axis=0)
            ],
        )

    def qi_experiment(
        self,
        fam: TargetFamily,
        spec: FlowSpec,
        window: Tuple[int, int],
        samples: RepBatch,
        horizon: Optional[int] = None,
        sampler: Optional[HaarSampler] = None,
    ) -> QiEstimate:
        """Monte Carlo correlations R_{m,m'} over a window and S_M sums.

        Only co-hit pairs are stored; every other pair contributes
        |0 - mu_m mu_m'|, so the absolute sum and row sums are exact without
        the dense matrix. The matrix itself is kept when the window is at
        most dense_limit wide."""
        start, end = window
        if not 1 <= start < end:
            raise InvalidArgumentError(
                f"window needs 1 <= M < N, got [{start}, {end}]")

        horizon = horizon or end
        mu_all = Targets.measure_series(
            fam, np.arange(1, max(end, horizon) + 1), sampler,
            self.measure_samples, self.injectivity_threshold)
        mu = mu_all[start - 1:end]
        width = end - start + 1

        e_m = float(mu_all[:horizon].sum())
        if not e_m > 0:
            raise InvalidArgumentError("E_M = 0; the family is empty")

        out = self.runner.map(
            Estimators.window_kernel, samples, spec=spec, fam=fam,
            window_start=start, window_end=end, horizon=horizon,
            renorm_cadence=self.renorm_cadence)
        count = len(samples)

        codes = [
            (hits[:, None] * width + hits[None, :]).ravel()
            for hits in out["window_hits"] if hits.size
        ]
        if codes:
            keys, counts = np.unique(np.concatenate(codes), return_counts=True)
        else:
            keys = np.zeros(0, dtype=np.int64)
            counts = np.zeros(0, dtype=np.int64)

        rows, cols = np.divmod(keys, width)
        p_hat = counts / count
        prod = mu[rows] * mu[cols]

        mu_sum = float(mu.sum())
        row_sums = mu * mu_sum
        np.add.at(row_sums, rows, np.abs(p_hat - prod) - prod)

        r_matrix = None
        if width <= self.dense_limit:
            joint = np.zeros((width, width))
            joint[rows, cols] = p_hat
            r_matrix = joint - np.outer(mu, mu)

        s_m = out["s_m"]
        log_e = max(math.log(e_m), 1.0)
        discrepancy = np.abs(s_m - e_m) / (
            math.sqrt(e_m) * log_e ** (1.5 + self.schmidt_epsilon))
        abs_sum = float(row_sums.sum())

        return QiEstimate(
            window=(start, end),
            r_matrix=r_matrix,
            row_sums=row_sums,
            abs_sum=abs_sum,
            mu_sum=mu_sum,
            ratio=abs_sum / mu_sum,
            e_m=e_m,
            s_m=s_m,
            discrepancy=discrepancy,
        )

    # Config driven runs

    def _setup(self):
        config = self.config
        lat = Common.load_lattice(config)
        center = Common.load_center(config, lat)
        spec = Common.load_flow(config, lat)

        return lat, center, spec

    def _samples(self, lat) -> Tuple[RepBatch, HaarSampler]:
        sampler = Common.load_sampler(self.config, lat)
        count = self.config.getint("EXPERIMENT", "samples")

        return sampler.sample_batch(count), sampler

    def _measure_sampler(self, lat) -> HaarSampler:
        return Common.load_sampler(self.config, lat, MEASURE_STREAM)

    def _result(
        self, kind: str, rows: List[Dict[str, Any]], aggregate: Dict[str, Any]
    ) -> ExperimentResult:
        seed = Common.load_seed(self.config)

        return ExperimentResult(
            experiment=kind,
            config_hash=Common.config_hash(self.config),
            seed=seed,
            columns=SCHEMAS[kind],
            rows=rows,
            aggregate=aggregate,
        )

    def run_orbit(self) -> ExperimentResult:
        lat, _, spec = self._setup()
        batch, _ = self._samples(lat)
        m_grid = Common.load_m_grid(self.config)

        out = self.runner.map(
            Estimators.orbit_kernel, batch, spec=spec, m_grid=m_grid,
            renorm_cadence=self.renorm_cadence)

        rows = []
        for sample_id in range(len(batch)):
            for j, m in enumerate(m_grid):
                w = out["w"][sample_id, j]
                h = out["h"][sample_id, j]
                rows.append({
                    "sample_id": sample_id, "m": m, "x1": float(w.real),
                    "x2": float(w.imag), "height": float(h),
                    "cusp_height": math.log(h),
                })

        aggregate = {
            "samples": len(batch),
            "median_final_cusp_height": Common.calculate_median(
                np.log(out["h"][:, -1])),
        }

        return self._result("orbit", rows, aggregate)

    def run_loglaw(self) -> ExperimentResult:
        lat, center, spec = self._setup()
        batch, _ = self._samples(lat)
        m_max = self.config.getint("EXPERIMENT", "m_max")
        n = lat.model.n

        est = self.loglaw_experiment(
            batch, spec, n, m_max, Targets.ball(lat, ConstantSchedule(1.0),
                                                 center))

        rows = [
            {
                "sample_id": i,
                "cusp_ratio": est.cusp_ratio[i],
                "ball_ratio": est.ball_ratio[i],
                "flagged": est.flagged[i],
                "outlier": est.outlier[i],
                "cusp_count_ratio": est.cusp_count_ratio[i],
                "ball_count_ratio": est.ball_count_ratio[i],
                "tau_ball_ratio": est.tau_ball_ratio[i],
                "tau_cusp_ratio": est.tau_cusp_ratio[i],
            }
            for i in range(len(batch))
        ]

        aggregate = {
            "samples": len(batch),
            "m_max": m_max,
            "cusp_limit": 1 / (n - 1),
            "ball_limit": 1 / n,
            "median_cusp_ratio": Common.calculate_median(est.cusp_ratio),
            "median_ball_ratio": Common.calculate_median(est.ball_ratio),
            "flagged": int(np.sum(est.flagged)),
            "outliers": int(np.sum(est.outlier)),
            "median_cusp_count_ratio": Common.calculate_median(
                est.cusp_count_ratio),
            "median_ball_count_ratio": Common.calculate_median(
                est.ball_count_ratio),
            "median_tau_ball_ratio": Common.calculate_median(
                est.tau_ball_ratio),
            "median_tau_cusp_ratio": Common.calculate_median(
                est.tau_cusp_ratio),
        }
        band = Common.quantile_band(est.cusp_ratio, self.quantile)
        aggregate["cusp_ratio_low"], aggregate["cusp_ratio_high"] = band
        band = Common.quantile_band(est.ball_ratio, self.quantile)
        aggregate["ball_ratio_low"], aggregate["ball_ratio_high"] = band
        for j, m in enumerate(est.m_grid):
            if m >= 2:
                aggregate[f"median_cusp_ratio_m{m}"] = Common.calculate_median(
                    est.cusp_trend[:, j])
                aggregate[f"median_ball_ratio_m{m}"] = Common.calculate_median(
                    est.ball_trend[:, j])

        return self._result("loglaw", rows, aggregate)

    def run_hits(self) -> ExperimentResult:
        lat, center, spec = self._setup()
        fam = Common.load_target(self.config, lat, center)
        batch, _ = self._samples(lat)
        m_grid = Common.load_m_grid(self.config)
        rank = spec.rank

        records = self.hit_counts_experiment(fam, spec, m_grid, batch)
        measure_sampler = self._measure_sampler(lat)
        mu = Targets.measure_series(
            fam, m_grid, measure_sampler, self.measure_samples,
            self.injectivity_threshold)
        expected = np.asarray(m_grid, dtype=np.float64) ** rank * mu

        sbc = np.full(len(m_grid), np.nan)
        if records and records[0].hit_count_diag is not None:
            series = Targets.measure_series(
                fam, np.arange(1, m_grid[-1] + 1), measure_sampler,
                self.measure_samples, self.injectivity_threshold)
            sbc = np.cumsum(series)[np.asarray(m_grid) - 1]

        rows = []
        frozen_ratios = []
        sbc_ratios = []
        for rec in records:
            for j, m in enumerate(m_grid):
                frozen = int(rec.hit_count_frozen[j])
                diag = None
                late = None
                sbc_ratio = float("nan")
                if rec.hit_count_diag is not None:
                    diag = int(rec.hit_count_diag[j])
                    late = int(rec.late_diag_hits[j])
                    sbc_ratio = diag / sbc[j]

                frozen_ratio = frozen / expected[j]
                rows.append({
                    "sample_id": rec.sample_id, "m": m,
                    "frozen_count": frozen, "diag_count": diag,
                    "frozen_ratio": frozen_ratio, "sbc_ratio": sbc_ratio,
                    "late_diag_hits": late,
                    "d_ball": None if rec.d_ball is None else rec.d_ball[j],
                    "d_cusp": rec.d_cusp[j],
                })
            frozen_ratios.append(rows[-1]["frozen_ratio"])
            sbc_ratios.append(rows[-1]["sbc_ratio"])

        aggregate = {
            "samples": len(records),
            "m": m_grid[-1],
            "measure": float(mu[-1]),
            "median_frozen_ratio": Common.calculate_median(frozen_ratios),
            "median_sbc_ratio": Common.calculate_median(sbc_ratios),
        }
        band = Common.quantile_band(frozen_ratios, self.quantile)
        aggregate["frozen_ratio_low"], aggregate["frozen_ratio_high"] = band

        return self._result("hits", rows, aggregate)

    def run_ah(self) -> ExperimentResult:
        lat, center, spec = self._setup()
        fam = Common.load_target(self.config, lat, center)
        batch, _ = self._samples(lat)
        m_lo = self.config.getint("EXPERIMENT", "m_lo")
        m_hi = self.config.getint("EXPERIMENT", "m_hi")

        est = self.always_hitting_experiment(fam, spec, batch, m_lo, m_hi)

        rows = [
            {"sample_id": i, "always_hit": est.always_hit[i],
             "first_miss": est.first_miss[i]}
            for i in range(len(batch))
        ]
        aggregate = {"samples": len(batch), "m_lo": m_lo, "m_hi": m_hi,
                     "fraction": est.fraction}
        for horizon, frac in zip(est.horizons, est.horizon_fractions):
            aggregate[f"fraction_to_{horizon}"] = frac

        running = 0.0
        for j, frac in zip(est.window_exponents, est.window_miss_fractions):
            running += frac
            aggregate[f"window_miss_{2 ** j}"] = frac
            aggregate[f"window_miss_sum_{2 ** j}"] = running

        return self._result("ah", rows, aggregate)

    def run_met(self) -> ExperimentResult:
        lat, center, spec = self._setup()
        fam = Common.load_target(self.config, lat, center)
        batch, _ = self._samples(lat)
        m_grid = Common.load_m_grid(self.config)

        est = self.met_experiment(
            fam, spec, m_grid, batch,
            spectral=Common.load_spectral(self.config, lat.model.n),
            sampler=self._measure_sampler(lat))

        rows = [
            {
                "m": m,
                "norm": est.norm_estimates[j],
                "norm_stderr": est.norm_stderr[j],
                "atypical_fraction": est.atypical_fractions[j],
                "empty_fraction": est.empty_fractions[j],
                "mean_beta": est.mean_beta[j],
            }
            for j, m in enumerate(m_grid)
        ]
        interval = est.slope_interval or (None, None)
        aggregate = {
            "samples": len(batch),
            "mean": est.mean,
            "kappa_hat": est.fitted_slope,
            "kappa_low": interval[0],
            "kappa_high": interval[1],
            "predicted_kappa": est.predicted_kappa,
            "atypical_bound": 5 / (est.mean * m_grid[-1] ** spec.rank),
        }

        return self._result("met", rows, aggregate)

    def run_qi(self) -> ExperimentResult:
        lat, center, spec = self._setup()
        fam = Common.load_target(self.config, lat, center)
        batch, _ = self._samples(lat)
        window = (self.config.getint("EXPERIMENT", "window_start"),
                  self.config.getint("EXPERIMENT", "window_end"))
        horizon = self.config.getint("EXPERIMENT", "schmidt_horizon")

        est = self.qi_experiment(
            fam, spec, window, batch, horizon or None,
            self._measure_sampler(lat))

        rows = [
            {"sample_id": i, "s_m": est.s_m[i], "e_m": est.e_m,
             "discrepancy": est.discrepancy[i]}
            for i in range(len(batch))
        ]
        aggregate = {
            "samples": len(batch),
            "window_start": window[0],
            "window_end": window[1],
            "abs_sum": est.abs_sum,
            "mu_sum": est.mu_sum,
            "ratio": est.ratio,
            "e_m": est.e_m,
            "discrepancy_within_one": float(np.mean(est.discrepancy <= 1)),
        }

        return self._result("qi", rows, aggregate)

    def run_spherical(self) -> ExperimentResult:
        section = self.config["SPECTRAL"]
        s = complex(section["s"].replace(" ", ""))
        n = int(section["n"])
        t_grid = Common.parse_float_list(section["t_grid"])

        points = Spectral.spherical_points(s, t_grid, n)
        rows = [
            {"s_real": p.s.real, "s_imag": p.s.imag, "t": p.t,
             "value_real": p.value.real, "value_imag": p.value.imag}
            for p in points
        ]

        aggregate: Dict[str, Any] = {"s_real": s.real, "s_imag": s.imag,
                                     "n": n}
        fit_grid = [t for t in t_grid if 1 <= t <= 40]
        if len(fit_grid) >= 2:
            fit = Spectral.decay_envelope_check(
                s, fit_grid, n,
                Common.load_spectral(self.config, n).decay_constant)
            aggregate["slope"] = fit.slope
            aggregate["predicted_slope"] = s.real - (n - 1) / 2
            aggregate["constant"] = fit.constant
            aggregate["envelope_sup"] = fit.envelope_sup
            aggregate["envelope_ratio"] = fit.envelope_ratio
            aggregate["within_envelope"] = fit.within_envelope

        if n == 3:
            aggregate["closed_form_error"] = max(
                abs(p.value - Spectral.closed_form_n3(s, p.t)) for p in points)

        return self._result("spherical", rows, aggregate)

    def run_sample(self) -> ExperimentResult:
        lat = Common.load_lattice(self.config)
        batch, sampler = self._samples(lat)
        w, h = Lattices.batch_projection(batch)

        rows = [
            {"sample_id": i, "x1": float(w[i].real), "x2": float(w[i].imag),
             "height": float(h[i])}
            for i in range(len(batch))
        ]
        aggregate: Dict[str, Any] = {
            "samples": len(batch),
            "acceptance_rate": sampler.stats.acceptance_rate,
        }
        if np.sum(h >= 1) >= 2:
            aggregate["height_ks_pvalue"] = Targets.height_goodness_of_fit(
                h, lat.model.n)

        return self._result("sample", rows, aggregate)

    def run_measure(self) -> ExperimentResult:
        lat, center, _ = self._setup()
        fam = Common.load_target(self.config, lat, center)
        sampler = self._measure_sampler(lat)
        m_grid = Common.load_m_grid(self.config)

        rows = []
        for m in m_grid:
            exact = Targets.exact_measure(fam, m, self.injectivity_threshold)
            est = Targets.estimate_measure(
                fam, m, sampler, self.measure_samples)
            z_score = float("nan")
            if exact is not None and est.stderr > 0:
                z_score = (est.value - exact) / est.stderr

            rows.append({
                "m": m,
                "exact": float("nan") if exact is None else exact,
                "estimate": est.value, "stderr": est.stderr,
                "z_score": z_score,
            })

        z_scores = [abs(r["z_score"]) for r in rows
                    if math.isfinite(r["z_score"])]
        aggregate = {
            "grid_points": len(m_grid),
            "samples": self.measure_samples,
            "max_abs_z": max(z_scores) if z_scores else float("nan"),
        }

        return self._result("measure", rows, aggregate)

    def run(self, kind: str) -> ExperimentResult:
        """Runs one configured experiment between begin and end banners."""
        drivers = {
            "orbit": self.run_orbit,
            "loglaw": self.run_loglaw,
            "hits": self.run_hits,
            "ah": self.run_ah,
            "met": self.run_met,
            "qi": self.run_qi,
            "spherical": self.run_spherical,
            "sample": self.run_sample,
            "measure": self.run_measure,
        }
        if kind not in drivers:
            raise ConfigurationError(
                f"unknown experiment {kind}; expected one of "
                f"{sorted(drivers)}")

        start_message = f'{"#" * 10} Begin {kind} experiment'
        self.console.log(start_message)

        started = time.perf_counter()
        result = drivers[kind]()
        elapsed = time.perf_counter() - started

        result.runtime = {
            "elapsed_seconds": round(elapsed, 3),
            "workers": self.runner.workers,
            "rows": len(result.rows),
        }

        header = "-" * 20
        end_message = (
            f"\n{header}\n{kind} experiment finished in {elapsed:.2f}s."
            f"\n{len(result.rows)} rows written.\n"
        )
        self.console.log(end_message)

        if self.verbose:
            for key, value in result.aggregate.items():
                self.console.log(f"{key} : {value}")

        return result
