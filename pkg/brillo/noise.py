# File: noise.py
# Date: 19-10-2026
#
"""
Additive white Gaussian noise at a prescribed signal to noise ratio.

Two SNR conventions coexist:

* peak-based: the Brillouin peak amplitude over the noise deviation,
  SNR = A_B / sigma. It is the axis of every benchmark.
* per-pixel-average: the average intensity per pixel over the whole
  detector, SNR = I_inf Delta / (X sigma), where I_inf is the integrated
  intensity of the spectrum (trapezoidal rule over the pixel index, i.e.
  in detector counts). It is the convention of the precision bound.

Random numbers come from numpy's PCG64 generator and its ziggurat normal
transform. Per-realization seeds are derived with numpy's SeedSequence,
a hash-based mixer of (base seed, indices), so that realizations can be
produced in any order or in parallel.
"""

# General imports
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import trapezoid

from .detector import DetectorModel
from .errors import DataError
from .lineshape import GroundTruth
from .spectrum import Spectrum, synthesize
from .trace import logger


class SnrConvention(str, Enum):
    PEAK = "peak-based"
    PER_PIXEL = "per-pixel-average"


@dataclass(frozen=True)
class NoiseSpec:
    """
    Standard deviation of the noise, the convention the SNR that produced
    it was expressed in, and the seed of the generator.
    """
    sigma: float
    seed: int = 0
    snr_convention: SnrConvention = SnrConvention.PEAK

    def __post_init__(self):
        if not self.sigma > 0:
            raise DataError("noise sigma must be positive, got {}".format(self.sigma))
        object.__setattr__(self, "snr_convention", SnrConvention(self.snr_convention))


def integrated_intensity(spectrum: Spectrum) -> float:
    """I_inf: trapezoidal integral of the intensities over the pixel index"""
    return float(trapezoid(spectrum.intensities))


def sigma_for_snr(target_snr: float, truth: GroundTruth, detector: DetectorModel,
                  convention: SnrConvention = SnrConvention.PEAK) -> float:
    """
    Noise deviation giving the target SNR.

    Parameters
    ----------
    target_snr : float
        strictly positive
    truth : GroundTruth
        the clean spectrum the noise will be added to
    detector : DetectorModel
    convention : SnrConvention

    Return
    ------
    sigma in detector counts
    """
    if not target_snr > 0:
        raise DataError("SNR must be positive, got {}".format(target_snr))
    convention = SnrConvention(convention)
    if convention is SnrConvention.PEAK:
        amplitude = truth.brillouin_amplitude
        if amplitude <= 0:
            raise DataError("zero Brillouin amplitude: the SNR is undefined")
        return amplitude/target_snr

    clean = synthesize(truth, detector)
    total = integrated_intensity(clean)
    if total <= 0:
        raise DataError("zero integrated intensity: the SNR is undefined")
    return total*detector.pixel_size_m/(detector.detector_width_m*target_snr)


def derive_seed(base_seed: int, *indices: int) -> int:
    """
    64-bit seed of one realization, mixed from the base seed and the
    indices with SeedSequence.
    """
    sequence = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(i) for i in indices))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def add_noise(clean: Spectrum, spec: NoiseSpec) -> Spectrum:
    """
    Add i.i.d. Gaussian(0, sigma^2) noise to every pixel.

    The same (spectrum, spec) pair always gives the same bits.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    noise = rng.standard_normal(len(clean))*spec.sigma
    logger.debug("noise sigma {:.4g} seed {}".format(spec.sigma, spec.seed))
    return clean.with_intensities(clean.intensities + noise)
