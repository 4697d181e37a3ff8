# File: wavelet.py
# Date: 05-10-2026
#
"""
Wavelet shrinkage denoising.

The spectrum is decomposed with a multi-level discrete wavelet transform,
the detail coefficients are shrunk towards zero by a threshold tied to the
noise level, and the inverse transform gives the denoised spectrum. The
approximation band is never thresholded.

Two universal thresholds are available. The classic one, n sqrt(2 ln N),
is the default. The variant n sqrt(2 ln N / N) is kept for literal
reproductions: at N = 120 it is about eleven times smaller and leaves most
of the noise in place.

Shrinkage is hard by default. Soft shrinkage lowers every surviving
coefficient by the threshold, the large ones of the Rayleigh line included.

Transforms are computed with PyWavelets.
"""

# General imports
import csv
import io
import math
import warnings
from collections import namedtuple
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import pywt

# Project imports
from .errors import DataError
from .spectrum import Spectrum
from .spectrum_io import atomic_write_text
from .trace import logger

# MAD of a unit Gaussian
MAD_TO_SIGMA = 0.6745


class WaveletFamily(str, Enum):
    DAUBECHIES = "daubechies"
    SYMLET = "symlet"


class ThresholdMode(str, Enum):
    SOFT = "soft"
    HARD = "hard"


class ThresholdRule(str, Enum):
    PAPER_UNIVERSAL = "paper-universal"
    DONOHO_UNIVERSAL = "donoho-universal"
    LEVEL_DEPENDENT = "level-dependent"


class Boundary(str, Enum):
    SYMMETRIC = "symmetric"
    PERIODIC = "periodic"
    ZERO = "zero"


# Boundary rule -> PyWavelets signal extension mode
_PYWT_MODES = {
    Boundary.SYMMETRIC: "symmetric",
    Boundary.PERIODIC: "periodization",
    Boundary.ZERO: "zero",
}

_PREFIXES = {
    WaveletFamily.DAUBECHIES: "db",
    WaveletFamily.SYMLET: "sym",
}


def default_levels(num_samples: int) -> int:
    """
    floor(log2 N) - 4, at least 1.

    Two levels at N = 120: coarser bands smear the 2 pixel wide Brillouin
    lines over the Rayleigh tail.
    """
    return max(1, int(math.floor(math.log2(num_samples))) - 4)


@dataclass(frozen=True)
class WaveletConfig:
    """
    levels : None selects default_levels(N) when the signal is known
    noise_level : None estimates it from the finest detail band
    threshold_scale : multiplier applied to every threshold
    """
    family: WaveletFamily = WaveletFamily.DAUBECHIES
    order: int = 4
    levels: Optional[int] = None
    threshold_mode: ThresholdMode = ThresholdMode.HARD
    threshold_rule: ThresholdRule = ThresholdRule.DONOHO_UNIVERSAL
    noise_level: Optional[float] = None
    boundary: Boundary = Boundary.SYMMETRIC
    threshold_scale: float = 1.0

    def __post_init__(self):
        for name, kind in (("family", WaveletFamily), ("threshold_mode", ThresholdMode),
                           ("threshold_rule", ThresholdRule), ("boundary", Boundary)):
            try:
                object.__setattr__(self, name, kind(getattr(self, name)))
            except ValueError:
                raise DataError("invalid wavelet {} '{}'".format(name, getattr(self, name)))
        # db1 is the Haar wavelet, symlets start at 2
        lowest = 1 if self.family is WaveletFamily.DAUBECHIES else 2
        if self.order < lowest:
            raise DataError("{} order must be at least {}, got {}".format(
                self.family.value, lowest, self.order))
        if self.wavelet_name not in pywt.wavelist(kind="discrete"):
            raise DataError("wavelet '{}' is not available".format(self.wavelet_name))
        if self.levels is not None and self.levels < 1:
            raise DataError("at least one decomposition level is needed")
        if self.noise_level is not None and self.noise_level < 0:
            raise DataError("noise level cannot be negative")
        if not self.threshold_scale >= 0:
            raise DataError("threshold scale cannot be negative")

    @property
    def wavelet_name(self) -> str:
        return "{}{}".format(_PREFIXES[self.family], self.order)

    @property
    def mode(self) -> str:
        return _PYWT_MODES[self.boundary]

    def levels_for(self, num_samples: int) -> int:
        levels = default_levels(num_samples) if self.levels is None else self.levels
        if num_samples < 2**levels or levels > int(math.floor(math.log2(num_samples))):
            raise DataError("{} levels need at least {} samples, got {}".format(
                levels, 2**levels, num_samples))
        return levels


@dataclass
class WaveletCoefficients:
    """
    Pyramid of a transform.

    detail[0] is the finest band (level 1), detail[-1] the coarsest
    (level L); the approximation sits below the coarsest band.
    """
    approximation: np.ndarray
    detail: list
    length: int
    config: WaveletConfig = field(default_factory=WaveletConfig)

    @property
    def levels(self) -> int:
        return len(self.detail)

    def count(self) -> int:
        """Total number of coefficients M"""
        return self.approximation.size + sum(band.size for band in self.detail)

    def to_pywt(self) -> list:
        """[cA_L, cD_L, ..., cD_1] as PyWavelets orders them"""
        return [self.approximation] + list(reversed(self.detail))

    def energy(self) -> float:
        return float(sum(np.sum(band**2) for band in self.to_pywt()))

    def with_detail(self, detail: list):
        return WaveletCoefficients(self.approximation, detail, self.length, self.config)


def dwt(signal, config: WaveletConfig = WaveletConfig()) -> WaveletCoefficients:
    """
    Multi-level decomposition of a spectrum (or a plain vector).

    Raises DataError when the signal is shorter than the filter support or
    than 2^levels.
    """
    values = np.array(signal.intensities if isinstance(signal, Spectrum) else signal, dtype=float)
    if values.ndim != 1:
        raise DataError("the transform works on 1-D signals")
    wavelet = pywt.Wavelet(config.wavelet_name)
    if values.size < wavelet.dec_len:
        raise DataError("signal of {} samples is shorter than the {} filter ({} taps)".format(
            values.size, config.wavelet_name, wavelet.dec_len))
    levels = config.levels_for(values.size)
    with warnings.catch_warnings():
        # Levels beyond the PyWavelets limit only add boundary coefficients
        warnings.simplefilter("ignore", UserWarning)
        bands = pywt.wavedec(values, wavelet, mode=config.mode, level=levels)
    return WaveletCoefficients(bands[0], list(reversed(bands[1:])), values.size, config)


def idwt(coeffs: WaveletCoefficients) -> np.ndarray:
    """Inverse transform, trimmed to the original length"""
    values = pywt.waverec(coeffs.to_pywt(), coeffs.config.wavelet_name, mode=coeffs.config.mode)
    return values[:coeffs.length]


def _mad_sigma(band: np.ndarray) -> float:
    if band.size == 0:
        raise DataError("empty detail band")
    return float(np.median(np.abs(band))/MAD_TO_SIGMA)


def estimate_noise_level(coeffs: WaveletCoefficients) -> float:
    """median(|finest detail|) / 0.6745"""
    return _mad_sigma(coeffs.detail[0])


def threshold_value(noise_level: float, num_samples: int,
                    rule: ThresholdRule = ThresholdRule.DONOHO_UNIVERSAL, level: int = None) -> float:
    """
    Shrinkage threshold.

    Parameters
    ----------
    noise_level : float
        n, the noise deviation; for the level-dependent rule, the one of
        the band being thresholded
    num_samples : int
        N, length of the signal
    rule : ThresholdRule
    level : int
        band the threshold is for (informational, the formula does not
        depend on it)
    """
    if noise_level < 0:
        raise DataError("noise level cannot be negative")
    if num_samples < 2:
        raise DataError("a threshold needs at least 2 samples")
    rule = ThresholdRule(rule)
    log_n = math.log(num_samples)
    if rule is ThresholdRule.PAPER_UNIVERSAL:
        return noise_level*math.sqrt(2.0*log_n/num_samples)
    return noise_level*math.sqrt(2.0*log_n)


def level_thresholds(coeffs: WaveletCoefficients, noise_level: float = None) -> list:
    """One threshold per detail band (finest first), scale applied"""
    config = coeffs.config
    if config.threshold_rule is ThresholdRule.LEVEL_DEPENDENT:
        values = [threshold_value(_mad_sigma(band), coeffs.length, config.threshold_rule, level)
                  for level, band in enumerate(coeffs.detail, start=1)]
    else:
        if noise_level is None:
            noise_level = estimate_noise_level(coeffs)
        value = threshold_value(noise_level, coeffs.length, config.threshold_rule)
        values = [value]*coeffs.levels
    return [config.threshold_scale*v for v in values]


def shrink(coeffs: WaveletCoefficients, thresholds, mode: ThresholdMode = ThresholdMode.SOFT) -> WaveletCoefficients:
    """
    Threshold the detail bands, approximation untouched.

    soft: c -> sign(c) max(|c| - Q, 0)
    hard: c -> c if |c| > Q else 0
    """
    thresholds = np.broadcast_to(np.asarray(thresholds, dtype=float), (coeffs.levels,))
    if np.any(thresholds < 0):
        raise DataError("thresholds cannot be negative")
    mode = ThresholdMode(mode)
    detail = []
    for band, q in zip(coeffs.detail, thresholds):
        if mode is ThresholdMode.SOFT:
            detail.append(pywt.threshold(band, q, mode="soft"))
        else:
            detail.append(np.where(np.abs(band) > q, band, 0.0))
    return coeffs.with_detail(detail)


DenoiseReport = namedtuple("DenoiseReport", ["spectrum", "noise_level", "thresholds", "coefficients"])


def denoise_report(data: Spectrum, config: WaveletConfig = WaveletConfig()) -> DenoiseReport:
    """
    Denoise and keep the intermediate quantities: the noise level used,
    the per-band thresholds and the shrunk coefficients.
    """
    coeffs = dwt(data, config)
    noise_level = config.noise_level
    if noise_level is None:
        noise_level = estimate_noise_level(coeffs)
    thresholds = level_thresholds(coeffs, noise_level)
    shrunk = shrink(coeffs, thresholds, config.threshold_mode)
    values = idwt(shrunk)
    logger.debug("wavelet {} L={} {} rule, noise {:.4g}, thresholds {}".format(
        config.wavelet_name, coeffs.levels, config.threshold_rule.value, noise_level,
        ", ".join("{:.4g}".format(q) for q in thresholds)))
    return DenoiseReport(data.with_intensities(values), noise_level, thresholds, shrunk)


def denoise(data: Spectrum, config: WaveletConfig = WaveletConfig()) -> Spectrum:
    """dwt, noise estimate, thresholds, shrinkage, inverse dwt"""
    return denoise_report(data, config).spectrum


def coefficients_to_csv(coeffs: WaveletCoefficients) -> str:
    """level,index,value rows; the approximation band is level 0"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["level", "index", "value"])
    for index, value in enumerate(coeffs.approximation):
        writer.writerow([0, index, repr(float(value))])
    for level, band in enumerate(coeffs.detail, start=1):
        for index, value in enumerate(band):
            writer.writerow([level, index, repr(float(value))])
    return buffer.getvalue()


def write_coefficients(coeffs: WaveletCoefficients, path: str):
    atomic_write_text(path, coefficients_to_csv(coeffs))
