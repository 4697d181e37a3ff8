# File: bench.py
# Date: 19-10-2026
#
"""
Monte Carlo bench of the shift estimators.

For every SNR of the grid and every realization index k a noisy copy of the
ground truth spectrum is drawn (seed derived from the base seed, the SNR
index, k and the attempt number), each method is applied to it and the
result is fitted with Lorentzians:

* none: the raw spectrum is fitted;
* wa: wavelet shrinkage then fit;
* mer: maximum entropy reconstruction then fit. When the spectrum admits no
  reconstruction a fresh one is drawn (attempt 1, 2, ...) until a feasible
  spectrum is found, the attempts being counted as regenerations.

Bias and standard deviation of the shift, mean and deviation of the
linewidth are accumulated from the successful fits only. Fits that did not
converge or gave a shift outside [0, bandwidth/2] are counted as failures.

Realizations are independent: they can be spread over a process pool and
are merged back in realization order, so the report does not depend on the
number of workers.
"""

# General imports
import csv
import io
import json
import math
import os
from collections import namedtuple
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from functools import partial
from multiprocessing import Pool
from typing import Optional

import numpy as np

# Project imports
from . import crlb, mer, peakfit, wavelet
from .detector import DetectorModel, reference_detector
from .errors import DataError
from .lineshape import GroundTruth, LorentzianPeak, reference_truth
from .noise import NoiseSpec, SnrConvention, add_noise, derive_seed, sigma_for_snr
from .plot_utils import new_figure, plot_series, save_svg
from .spectrum import synthesize
from .spectrum_io import atomic_write_text
from .trace import logger

MIN_REALIZATIONS = 50

# MER lambda scale per SNR; the prior carries more weight on the noisiest
# spectra. SNRs not listed use MerConfig.lambda_scale.
LAMBDA_SCALES = {1.0: 0.25, 2.0: 0.5}


class Method(str, Enum):
    NONE = "none"
    WA = "wa"
    MER = "mer"


@dataclass(frozen=True)
class BenchConfig:
    """
    lambda_scale_table : SNR -> MER lambda scale; SNRs not listed use the
        scale of mer_config
    prior_snrs : SNRs at which the MER default model carries the true peak
        positions; None means every SNR, an empty tuple none
    prior_offset_hz : moves the Brillouin hints outwards, to study the pull
        of a wrong prior
    fit_with_hints : seed every fit with the true peaks instead of the
        automatic initial guess (off by default, for diagnostics)
    max_regenerations : cap on the redraws of one infeasible realization
    """
    truth: GroundTruth = field(default_factory=reference_truth)
    detector: DetectorModel = field(default_factory=reference_detector)
    snr_grid: tuple = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10)
    realizations: int = 500
    methods: tuple = (Method.NONE, Method.WA, Method.MER)
    regenerate_infeasible: bool = True
    max_regenerations: int = 100
    base_seed: int = 0
    snr_convention: SnrConvention = SnrConvention.PEAK
    subsamples: int = 1
    mer_config: mer.MerConfig = field(default_factory=mer.MerConfig)
    wavelet_config: wavelet.WaveletConfig = field(default_factory=wavelet.WaveletConfig)
    fit_options: peakfit.FitOptions = field(default_factory=peakfit.FitOptions)
    lambda_scale_table: dict = field(default_factory=lambda: dict(LAMBDA_SCALES))
    prior_snrs: Optional[tuple] = None
    prior_background_fraction: float = 0.4
    prior_offset_hz: float = 0.0
    fit_with_hints: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.realizations < MIN_REALIZATIONS:
            raise DataError("at least {} realizations are needed, got {}".format(
                MIN_REALIZATIONS, self.realizations))
        grid = tuple(float(s) for s in self.snr_grid)
        if not grid or any(not s > 0 for s in grid):
            raise DataError("SNR grid values must be positive")
        object.__setattr__(self, "snr_grid", grid)
        try:
            methods = tuple(Method(m) for m in self.methods)
        except ValueError as err:
            raise DataError("unknown method: {}".format(err))
        if not methods:
            raise DataError("no method selected")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "snr_convention", SnrConvention(self.snr_convention))
        if self.max_regenerations < 0:
            raise DataError("max regenerations cannot be negative")
        if not 0 < self.prior_background_fraction <= 1:
            raise DataError("prior background fraction must be in (0, 1]")
        if self.workers < 1:
            raise DataError("at least one worker is needed")
        table = {float(snr): float(scale) for snr, scale in dict(self.lambda_scale_table).items()}
        if any(not scale > 0 for scale in table.values()):
            raise DataError("lambda scales must be positive")
        object.__setattr__(self, "lambda_scale_table", table)
        if self.prior_snrs is not None:
            object.__setattr__(self, "prior_snrs", tuple(float(s) for s in self.prior_snrs))

    def uses_prior(self, snr: float) -> bool:
        return self.prior_snrs is None or float(snr) in self.prior_snrs

    def mer_config_for(self, snr: float) -> mer.MerConfig:
        scale = self.lambda_scale_table.get(float(snr))
        if scale is None:
            return self.mer_config
        return replace(self.mer_config, lambda_scale=scale)


@dataclass
class BenchRow:
    snr: float
    method: Method
    bias_hz: float
    std_hz: float
    bias_pct: float
    std_pct: float
    linewidth_mean_hz: float
    linewidth_std_hz: float
    n_success: int
    n_regenerated: int
    n_fit_failures: int
    crlb_std_hz: float
    n_infeasible: int = 0
    n_max_iterations: int = 0


REPORT_HEADER = ["snr", "method", "bias_ghz", "std_ghz", "bias_pct", "std_pct",
                 "linewidth_mean_ghz", "linewidth_std_ghz", "n_success", "n_regenerated",
                 "n_fit_failures", "crlb_std_ghz"]


def _g(value: float) -> str:
    return "{:.10g}".format(value)


@dataclass
class BenchReport:
    """
    One row per (snr, method) in grid then method order.

    incomplete is set when the run was interrupted: the rows then cover the
    realizations merged so far.
    """
    rows: list
    crlb_std_hz: dict
    provenance: dict
    incomplete: bool = False

    def row(self, snr: float, method) -> BenchRow:
        method = Method(method)
        for row in self.rows:
            if row.snr == float(snr) and row.method is method:
                return row
        raise DataError("no row for SNR {} and method '{}'".format(snr, method.value))

    def snrs(self) -> list:
        return sorted({row.snr for row in self.rows})

    def methods(self) -> list:
        seen = []
        for row in self.rows:
            if row.method not in seen:
                seen.append(row.method)
        return seen

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for r in self.rows:
            writer.writerow([_g(r.snr), r.method.value, _g(r.bias_hz*1e-9), _g(r.std_hz*1e-9),
                             _g(r.bias_pct), _g(r.std_pct), _g(r.linewidth_mean_hz*1e-9),
                             _g(r.linewidth_std_hz*1e-9), r.n_success, r.n_regenerated,
                             r.n_fit_failures, _g(r.crlb_std_hz*1e-9)])
        return buffer.getvalue()

    def to_json(self) -> str:
        def clean(value):
            if isinstance(value, float) and not math.isfinite(value):
                return None
            if isinstance(value, Enum):
                return value.value
            return value

        rows = [{f.name: clean(getattr(r, f.name)) for f in fields(r)} for r in self.rows]
        document = {
            "incomplete": self.incomplete,
            "rows": rows,
            "crlb_std_hz": {_g(snr): clean(std) for snr, std in self.crlb_std_hz.items()},
            "provenance": self.provenance,
        }
        return json.dumps(document, indent=2, sort_keys=True) + "\n"

    def write(self, out_dir: str):
        """report.csv and report.json in out_dir"""
        atomic_write_text(os.path.join(out_dir, "report.csv"), self.to_csv())
        atomic_write_text(os.path.join(out_dir, "report.json"), self.to_json())


# Outcome of one method on one realization: shift and width are None on failure
MethodOutcome = namedtuple("MethodOutcome", ["shift_hz", "fwhm_hz", "regenerated", "infeasible",
                                             "max_iterations"])
UnitOutcome = namedtuple("UnitOutcome", ["snr_index", "k", "methods"])


class _Stats():
    """Sufficient statistics of one (snr, method) cell"""

    def __init__(self):
        self.n = 0
        self.sum_offset = 0.0
        self.sum_offset_sq = 0.0
        self.sum_width = 0.0
        self.sum_width_sq = 0.0
        self.regenerated = 0
        self.failures = 0
        self.infeasible = 0
        self.max_iterations = 0

    def add(self, outcome: MethodOutcome, true_shift: float):
        self.regenerated += outcome.regenerated
        self.max_iterations += int(outcome.max_iterations)
        if outcome.infeasible:
            self.infeasible += 1
            return
        if outcome.shift_hz is None:
            self.failures += 1
            return
        offset = outcome.shift_hz - true_shift
        self.n += 1
        self.sum_offset += offset
        self.sum_offset_sq += offset*offset
        self.sum_width += outcome.fwhm_hz
        self.sum_width_sq += outcome.fwhm_hz**2

    @staticmethod
    def _moments(total, total_sq, n):
        if n == 0:
            return math.nan, math.nan
        mean = total/n
        return mean, math.sqrt(max(total_sq/n - mean*mean, 0.0))

    def row(self, snr, method, true_shift, crlb_std) -> BenchRow:
        bias, std = self._moments(self.sum_offset, self.sum_offset_sq, self.n)
        width, width_std = self._moments(self.sum_width, self.sum_width_sq, self.n)
        return BenchRow(snr=snr, method=method, bias_hz=bias, std_hz=std,
                        bias_pct=100.0*bias/true_shift, std_pct=100.0*std/true_shift,
                        linewidth_mean_hz=width, linewidth_std_hz=width_std,
                        n_success=self.n, n_regenerated=self.regenerated,
                        n_fit_failures=self.failures, crlb_std_hz=crlb_std,
                        n_infeasible=self.infeasible, n_max_iterations=self.max_iterations)


def prior_hints(config: BenchConfig) -> list:
    """True peaks, Brillouin hints pushed outwards by prior_offset_hz"""
    freqs = config.detector.frequency_axis()
    hints = []
    for peak in config.truth.peaks:
        center = peak.center_hz
        if center > config.truth.rayleigh.center_hz:
            center += config.prior_offset_hz
        elif center < config.truth.rayleigh.center_hz:
            center -= config.prior_offset_hz
        center = min(max(center, freqs[0]), freqs[-1])
        hints.append(LorentzianPeak(center, peak.fwhm_hz, peak.amplitude))
    return hints


def _fit(config: BenchConfig, spectrum) -> tuple:
    """(shift, fwhm) or (None, None) for a failed fit"""
    hints = config.truth if config.fit_with_hints else None
    try:
        result = peakfit.fit_spectrum(spectrum, len(config.truth.peaks), config.fit_options, hints)
    except DataError as err:
        logger.debug("fit failed: {}".format(err))
        return None, None
    if not result.converged or not 0 <= result.shift_hz <= 0.5*config.detector.bandwidth_hz:
        return None, None
    return result.shift_hz, result.fwhm_hz


def _noisy(config, clean, sigma, snr_index, k, attempt):
    seed = derive_seed(config.base_seed, snr_index, k, attempt)
    return add_noise(clean, NoiseSpec(sigma, seed, config.snr_convention))


def _run_mer(config, clean, noisy, sigma, snr, snr_index, k) -> MethodOutcome:
    mer_config = config.mer_config_for(snr)
    hints = prior_hints(config) if config.uses_prior(snr) else None
    regenerated = 0
    attempt = 0
    while True:
        cfg = mer_config
        total = float(noisy.intensities[noisy.active()].sum())
        if hints is not None and total > 0:
            model = mer.build_prior(hints, config.detector, config.prior_background_fraction, total)
            cfg = replace(mer_config, prior_model=model)
        result = mer.reconstruct(noisy, config.detector.response, sigma, cfg)
        if result.status is not mer.MerStatus.INFEASIBLE:
            break
        if not config.regenerate_infeasible or regenerated >= config.max_regenerations:
            return MethodOutcome(None, None, regenerated, True, False)
        regenerated += 1
        attempt += 1
        noisy = _noisy(config, clean, sigma, snr_index, k, attempt)

    shift, fwhm = _fit(config, result.reconstruction)
    return MethodOutcome(shift, fwhm, regenerated, False,
                         result.status is mer.MerStatus.MAX_ITERATIONS)


def run_unit(config: BenchConfig, unit: tuple) -> UnitOutcome:
    """
    One realization at one SNR for every method.

    Parameters
    ----------
    config : BenchConfig
    unit : tuple
        (snr_index, k, sigma)
    """
    snr_index, k, sigma = unit
    snr = config.snr_grid[snr_index]
    clean = synthesize(config.truth, config.detector, config.subsamples)
    noisy = _noisy(config, clean, sigma, snr_index, k, 0)
    outcomes = {}
    for method in config.methods:
        if method is Method.NONE:
            shift, fwhm = _fit(config, noisy)
            outcomes[method] = MethodOutcome(shift, fwhm, 0, False, False)
        elif method is Method.WA:
            shift, fwhm = _fit(config, wavelet.denoise(noisy, config.wavelet_config))
            outcomes[method] = MethodOutcome(shift, fwhm, 0, False, False)
        else:
            outcomes[method] = _run_mer(config, clean, noisy, sigma, snr, snr_index, k)
    return UnitOutcome(snr_index, k, outcomes)


def _config_summary(config: BenchConfig) -> dict:
    def enum_values(item):
        return {key: (value.value if isinstance(value, Enum) else value)
                for key, value in item.items()}

    mer_fields = {f.name: getattr(config.mer_config, f.name) for f in fields(config.mer_config)
                  if f.name != "prior_model"}
    return {
        "truth": {
            "peaks_ghz": [[p.center_hz*1e-9, p.fwhm_hz*1e-9, p.amplitude] for p in config.truth.peaks],
            "shift_ghz": config.truth.brillouin_shift_hz*1e-9,
            "fwhm_ghz": config.truth.brillouin_fwhm_hz*1e-9,
            "background": config.truth.background,
        },
        "detector": {
            "pixel_size_um": config.detector.pixel_size_m*1e6,
            "detector_width_mm": config.detector.detector_width_m*1e3,
            "num_pixels": config.detector.num_pixels,
            "bandwidth_ghz": config.detector.bandwidth_hz*1e-9,
            "dispersion_scale_m_per_hz": config.detector.dispersion_scale,
            "response_fwhm_ghz": config.detector.response_fwhm_hz*1e-9,
            "identity_response": config.detector.response is None,
        },
        "snr_grid": list(config.snr_grid),
        "snr_convention": config.snr_convention.value,
        "realizations": config.realizations,
        "methods": [m.value for m in config.methods],
        "base_seed": config.base_seed,
        "regenerate_infeasible": config.regenerate_infeasible,
        "max_regenerations": config.max_regenerations,
        "subsamples": config.subsamples,
        "mer": enum_values(mer_fields),
        "lambda_scale_table": {_g(k): v for k, v in sorted(config.lambda_scale_table.items())},
        "prior_snrs": None if config.prior_snrs is None else list(config.prior_snrs),
        "prior_background_fraction": config.prior_background_fraction,
        "prior_offset_ghz": config.prior_offset_hz*1e-9,
        "fit_with_hints": config.fit_with_hints,
        "wavelet": enum_values(asdict(config.wavelet_config)),
        "fit": asdict(config.fit_options),
        "rms_error_convention": "100 * RMS residual / mean fitted Brillouin amplitude",
    }


def run_bench(config: BenchConfig, progress_sink=None) -> BenchReport:
    """
    Run every realization of every SNR.

    Parameters
    ----------
    config : BenchConfig
    progress_sink : callable
        optional progress_sink(done, total), called after each realization

    Return
    ------
    BenchReport, flagged incomplete if interrupted
    """
    sigmas = [sigma_for_snr(snr, config.truth, config.detector, config.snr_convention)
              for snr in config.snr_grid]
    crlb_std = {snr: crlb.crlb_std(crlb.inputs_for_truth(config.truth, config.detector, sigma))
                for snr, sigma in zip(config.snr_grid, sigmas)}
    units = [(i, k, sigmas[i]) for i in range(len(config.snr_grid)) for k in range(config.realizations)]
    stats = {(i, m): _Stats() for i in range(len(config.snr_grid)) for m in config.methods}
    true_shift = config.truth.brillouin_shift_hz

    logger.info("bench: {} SNR values x {} realizations, methods {}, {} worker(s)".format(
        len(config.snr_grid), config.realizations, ",".join(m.value for m in config.methods),
        config.workers))

    worker = partial(run_unit, config)
    incomplete = False
    done = 0
    pool = None
    try:
        if config.workers > 1:
            pool = Pool(processes=config.workers)
            outcomes = pool.imap(worker, units, chunksize=max(1, config.realizations//(4*config.workers)))
        else:
            outcomes = map(worker, units)
        for outcome in outcomes:
            for method, result in outcome.methods.items():
                stats[(outcome.snr_index, method)].add(result, true_shift)
            done += 1
            if progress_sink is not None:
                progress_sink(done, len(units))
            if done % config.realizations == 0:
                logger.info("SNR {} done".format(config.snr_grid[outcome.snr_index]))
    except KeyboardInterrupt:
        incomplete = True
        logger.warning("bench interrupted after {} of {} realizations".format(done, len(units)))
        if pool is not None:
            pool.terminate()
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    rows = []
    for i, snr in enumerate(config.snr_grid):
        for method in config.methods:
            rows.append(stats[(i, method)].row(snr, method, true_shift, crlb_std[snr]))
    for row in rows:
        if row.n_fit_failures:
            logger.warning("SNR {} {}: {} fits discarded".format(row.snr, row.method.value,
                                                                row.n_fit_failures))
    return BenchReport(rows, crlb_std, _config_summary(config), incomplete)


def linewidth_stats(report: BenchReport, snr: float) -> dict:
    """method -> (mean FWHM, FWHM deviation) in Hz at one SNR"""
    rows = [r for r in report.rows if r.snr == float(snr)]
    if not rows:
        raise DataError("SNR {} not in the report".format(snr))
    return {r.method: (r.linewidth_mean_hz, r.linewidth_std_hz) for r in rows}


def _series_csv(header, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def render_plots(report: BenchReport, out_dir: str) -> list:
    """
    Bias against SNR and log10(std) against SNR with the bound overlaid,
    each as SVG plus the CSV behind it.

    Return
    ------
    list of written paths
    """
    if report.incomplete:
        logger.warning("plotting an incomplete report")
    snrs = report.snrs()
    methods = report.methods()
    paths = []

    bias = {m.value: [report.row(s, m).bias_pct for s in snrs] for m in methods}
    fig, ax = new_figure("Bias of the Brillouin shift estimate", "SNR", "Bias (% of the shift)")
    plot_series(ax, snrs, bias)
    ax.axhline(0.0, color="black", linewidth=0.8)
    csv_rows = [[_g(s), m, _g(values[i])] for m, values in bias.items() for i, s in enumerate(snrs)]
    paths += _save(fig, out_dir, "bias_vs_snr", ["snr", "method", "bias_pct"], csv_rows)

    log_std = {}
    for m in methods:
        stds = np.array([report.row(s, m).std_hz*1e-9 for s in snrs])
        with np.errstate(divide="ignore", invalid="ignore"):
            log_std[m.value] = np.log10(stds)
    fig, ax = new_figure("Standard deviation of the Brillouin shift estimate", "SNR",
                         "log10(std / GHz)")
    plot_series(ax, snrs, log_std)
    bound = np.log10([report.crlb_std_hz[s]*1e-9 for s in snrs])
    ax.plot(snrs, bound, "k--", label="CRLB")
    ax.legend()
    csv_rows = [[_g(s), m, _g(values[i])] for m, values in log_std.items() for i, s in enumerate(snrs)]
    csv_rows += [[_g(s), "crlb", _g(bound[i])] for i, s in enumerate(snrs)]
    paths += _save(fig, out_dir, "log_std_vs_snr", ["snr", "series", "log10_std_ghz"], csv_rows)
    return paths


def _save(fig, out_dir, stem, header, rows) -> list:
    svg = os.path.join(out_dir, stem + ".svg")
    table = os.path.join(out_dir, stem + ".csv")
    save_svg(fig, svg)
    atomic_write_text(table, _series_csv(header, rows))
    return [svg, table]
