# File: crlb.py
# Date: 09-10-2026
#
"""
Cramer-Rao lower bound on the variance of Brillouin shift estimates.

For a pixelated detector with white Gaussian noise the bound reads

    var(Omega) >= (pi Delta / 4 X^2) (alpha Gamma + gamma)^3 / SNR^2
                  * (1 + 2 I)^2 / (alpha^2 I^2)

with Delta the pixel size, X the detector width, alpha the dispersion scale
(meters per Hz), Gamma the Brillouin FWHM, gamma the FWHM of the response
expressed as a length, I the Brillouin over Rayleigh amplitude ratio and
SNR the average per-pixel signal to noise ratio I_inf Delta / (X sigma).

Here gamma is carried in Hz like Gamma, so alpha Gamma + gamma becomes
alpha (Gamma + gamma_hz) and the bound simplifies to

    pi Delta alpha (Gamma + gamma_hz)^3 (1 + 2 I)^2 / (4 X^2 SNR^2 I^2)

in Hz^2: Delta alpha / X^2 is 1/Hz and the cube brings Hz^3.
"""

# General imports
import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .detector import DetectorModel
from .errors import DataError
from .lineshape import GroundTruth
from .noise import integrated_intensity
from .spectrum import synthesize
from .spectrum_io import atomic_write_text
from .trace import logger

# Relative agreement required between a given SNR and I_inf, Delta, X, sigma
SNR_CONSISTENCY = 1e-9


@dataclass(frozen=True)
class CrlbInputs:
    """
    Everything the bound depends on.

    integrated_intensity and noise_sigma are optional; when both are
    given they must reproduce snr_per_pixel.
    """
    detector: DetectorModel
    brillouin_fwhm_hz: float
    relative_intensity: float
    snr_per_pixel: float
    integrated_intensity: Optional[float] = None
    noise_sigma: Optional[float] = None

    def __post_init__(self):
        if not self.brillouin_fwhm_hz > 0:
            raise DataError("Brillouin FWHM must be positive")
        if not self.relative_intensity >= 0:
            raise DataError("relative intensity cannot be negative")
        if not self.snr_per_pixel > 0:
            raise DataError("SNR must be positive")
        if self.integrated_intensity is not None and self.noise_sigma is not None:
            expected = snr_per_pixel(self.integrated_intensity, self.detector, self.noise_sigma)
            if abs(expected - self.snr_per_pixel) > SNR_CONSISTENCY*expected:
                raise DataError("SNR {} inconsistent with I_inf, Delta, X, sigma (expected {})".format(
                    self.snr_per_pixel, expected))

    def with_snr(self, snr: float):
        return CrlbInputs(self.detector, self.brillouin_fwhm_hz, self.relative_intensity, snr)


def snr_per_pixel(integrated: float, detector: DetectorModel, sigma: float) -> float:
    """I_inf Delta / (X sigma)"""
    if not integrated > 0 or not sigma > 0:
        raise DataError("integrated intensity and sigma must be positive")
    return integrated*detector.pixel_size_m/(detector.detector_width_m*sigma)


def crlb_variance(inputs: CrlbInputs) -> float:
    """
    Variance bound on the shift estimate, in Hz^2.

    Returns inf (with a warning) when the relative intensity is zero.
    """
    detector = inputs.detector
    ratio = inputs.relative_intensity
    if ratio == 0:
        logger.warning("zero Brillouin/Rayleigh ratio: the bound diverges")
        return math.inf
    if math.isinf(ratio):
        # No Rayleigh line: (1 + 2I)^2 / I^2 -> 4
        intensity_term = 4.0
    else:
        intensity_term = (1.0 + 2.0*ratio)**2/ratio**2
    width = inputs.brillouin_fwhm_hz + detector.response_fwhm_hz
    return (math.pi*detector.pixel_size_m*detector.dispersion_scale*width**3*intensity_term /
            (4.0*detector.detector_width_m**2*inputs.snr_per_pixel**2))


def crlb_std(inputs: CrlbInputs) -> float:
    return math.sqrt(crlb_variance(inputs))


def crlb_curve(inputs: CrlbInputs, snr_grid) -> np.ndarray:
    """
    Standard deviation bound (Hz) at every SNR of an ascending grid.
    """
    grid = np.asarray(snr_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DataError("SNR grid must be a non empty vector")
    if np.any(grid <= 0):
        raise DataError("SNR grid values must be positive")
    if np.any(np.diff(grid) <= 0):
        raise DataError("SNR grid must be strictly ascending")
    return np.array([crlb_std(inputs.with_snr(snr)) for snr in grid])


def inputs_for_truth(truth: GroundTruth, detector: DetectorModel, sigma: float) -> CrlbInputs:
    """
    Bound inputs of a synthesized spectrum at noise level sigma: I_inf is
    the trapezoidal integral of the clean spectrum.
    """
    clean = synthesize(truth, detector)
    total = integrated_intensity(clean)
    snr = snr_per_pixel(total, detector, sigma)
    return CrlbInputs(detector, truth.brillouin_fwhm_hz, truth.relative_intensity, snr,
                      integrated_intensity=total, noise_sigma=sigma)


def curve_to_csv(snr_grid, std_hz) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["snr", "crlb_std_ghz"])
    for snr, std in zip(snr_grid, std_hz):
        writer.writerow(["{:.10g}".format(snr), "{:.10g}".format(std*1e-9)])
    return buffer.getvalue()


def write_curve(snr_grid, std_hz, path: str):
    atomic_write_text(path, curve_to_csv(snr_grid, std_hz))
