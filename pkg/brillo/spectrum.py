# File: spectrum.py
# Date: 19-10-2026
#
"""
A spectrum is a frequency axis bound to per-pixel intensities.

It is the currency of every stage: synthesis produces one, noise is added
to one, reconstruction and denoising return one, fitting consumes one.

A spectrum carries an optional boolean mask: True marks a pixel excluded
from fitting and from the data term of a reconstruction (for example a
saturated Rayleigh region). The values of the arrays are never changed in
place: every operation returns a new Spectrum.
"""

# General imports
import numpy as np

from .detector import DetectorModel
from .errors import DataError
from .lineshape import GroundTruth, lorentzian_sum
from .trace import logger

# Relative tolerance on the uniform spacing of the axis
SPACING_TOLERANCE = 1e-9


class Spectrum():
    """
    Pixelated spectrum on a uniform, strictly increasing frequency axis.
    """

    def __init__(self, frequencies_hz, intensities, mask=None):
        """
        Parameters
        ----------
        frequencies_hz : array
            pixel-center frequencies, strictly increasing and uniformly spaced
        intensities : array
            per-pixel values, same length as the axis
        mask : array
            optional boolean vector, True on excluded pixels
        """
        freqs = np.array(frequencies_hz, dtype=float)
        values = np.array(intensities, dtype=float)
        if freqs.ndim != 1 or freqs.size < 2:
            raise DataError("a spectrum needs a 1-D axis of at least 2 pixels")
        if values.shape != freqs.shape:
            raise DataError("intensities length {} differs from axis length {}".format(
                values.size, freqs.size))
        steps = np.diff(freqs)
        if np.any(steps <= 0):
            raise DataError("frequency axis must be strictly increasing")
        if np.max(np.abs(steps - steps.mean())) > SPACING_TOLERANCE*abs(steps.mean()):
            raise DataError("frequency axis must be uniformly spaced")
        if mask is not None:
            mask = np.array(mask, dtype=bool)
            if mask.shape != freqs.shape:
                raise DataError("mask length {} differs from axis length {}".format(
                    mask.size, freqs.size))
            if not mask.any():
                mask = None

        self.frequencies_hz = freqs
        self.intensities = values
        self.mask = mask
        self.frequencies_hz.setflags(write=False)
        self.intensities.setflags(write=False)
        if self.mask is not None:
            self.mask.setflags(write=False)

    def __len__(self):
        return self.frequencies_hz.size

    def __str__(self):
        masked = 0 if self.mask is None else int(self.mask.sum())
        return "Spectrum {} px [{:.3f}, {:.3f}] GHz, {} masked".format(
            len(self), self.frequencies_hz[0]*1e-9, self.frequencies_hz[-1]*1e-9, masked)

    @property
    def step_hz(self) -> float:
        return float((self.frequencies_hz[-1] - self.frequencies_hz[0])/(len(self) - 1))

    def active(self) -> np.ndarray:
        """Boolean vector, True on the pixels taking part in fits"""
        if self.mask is None:
            return np.ones(len(self), dtype=bool)
        return ~self.mask

    def with_intensities(self, intensities):
        """Same axis and mask, new values"""
        return Spectrum(self.frequencies_hz, intensities, self.mask)

    def with_mask(self, mask):
        """Same axis and values, new mask (None clears it)"""
        return Spectrum(self.frequencies_hz, self.intensities, mask)

    def mask_band(self, lo_hz: float, hi_hz: float):
        """Add the band [lo_hz, hi_hz] to the mask"""
        band = (self.frequencies_hz >= lo_hz) & (self.frequencies_hz <= hi_hz)
        if not band.any():
            logger.warning("mask band [{:.3f}, {:.3f}] GHz covers no pixel".format(
                lo_hz*1e-9, hi_hz*1e-9))
        current = np.zeros(len(self), dtype=bool) if self.mask is None else self.mask
        return self.with_mask(current | band)

    def mirrored(self):
        """Reflect the spectrum about 0 Hz: f -> -f, pixel order reversed"""
        mask = None if self.mask is None else self.mask[::-1]
        return Spectrum(-self.frequencies_hz[::-1], self.intensities[::-1], mask)

    def energy(self) -> float:
        """Sum of squared intensities"""
        return float(np.sum(self.intensities**2))

    def span(self) -> tuple:
        return (float(self.frequencies_hz[0]), float(self.frequencies_hz[-1]))


def synthesize(peaks, detector: DetectorModel, subsamples: int = 1, background: float = 0.0) -> Spectrum:
    """
    Pixelated sum of peak profiles.

    Parameters
    ----------
    peaks : GroundTruth or list of LorentzianPeak
        any number of peaks, none included (all-zero spectrum); a
        GroundTruth brings its own background
    detector : DetectorModel
    subsamples : int
        1 samples every profile at the pixel centers; k > 1 averages k
        equally spaced samples inside each pixel
    background : float
        constant added to every pixel when peaks is a plain list

    Return
    ------
    Spectrum on the detector axis, passed through the detector response
    """
    if subsamples < 1:
        raise DataError("subsamples must be at least 1, got {}".format(subsamples))
    if isinstance(peaks, GroundTruth):
        background = peaks.background
        peaks = peaks.peaks
    peaks = list(peaks)
    freqs = detector.frequency_axis()
    lo, hi = freqs[0], freqs[-1]
    for peak in peaks:
        if peak.center_hz < lo or peak.center_hz > hi:
            raise DataError("peak at {:.3f} GHz outside the axis [{:.3f}, {:.3f}] GHz".format(
                peak.center_hz*1e-9, lo*1e-9, hi*1e-9))

    if subsamples == 1:
        values = lorentzian_sum(peaks, freqs)
    else:
        offsets = ((np.arange(subsamples) + 0.5)/subsamples - 0.5)*detector.step_hz
        grid = freqs[:, None] + offsets[None, :]
        values = lorentzian_sum(peaks, grid).mean(axis=1)
    values = values + background

    raw = Spectrum(freqs, values)
    return apply_response(detector, raw)


def apply_response(detector: DetectorModel, raw: Spectrum) -> Spectrum:
    """Blur a spectrum with the detector response: out = R . in"""
    if len(raw) != detector.num_pixels:
        raise DataError("spectrum has {} pixels, the response expects {}".format(
            len(raw), detector.num_pixels))
    if detector.response is None:
        return raw
    return raw.with_intensities(detector.response @ raw.intensities)
