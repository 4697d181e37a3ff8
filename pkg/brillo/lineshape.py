# File: lineshape.py
# Date: 19-10-2026
#
# Description
# This file contains the line shapes used to compose a Brillouin spectrum:
# the Lorentzian peak and the ground truth made of a Rayleigh line with its
# Stokes and anti-Stokes companions.
#
"""
In a spectrum a line is represented by a Lorentzian profile normalised to
its peak height, not to its area: the amplitude of a peak is the intensity
(in detector counts) read at its center.

All frequencies are relative to the Rayleigh line, which sits at 0 Hz, and
are expressed in Hz.
"""

# General imports
from collections import namedtuple

import numpy as np

from .errors import DataError


class LorentzianPeak(namedtuple("LorentzianPeak", ["center_hz", "fwhm_hz", "amplitude"])):
    """
    Center / FWHM / amplitude triple.

    It is the ground truth of the synthesis and the output of the fit.
    """
    __slots__ = ()

    def __new__(cls, center_hz: float, fwhm_hz: float, amplitude: float):
        if not np.isfinite(center_hz):
            raise DataError("peak center must be finite, got {}".format(center_hz))
        if not fwhm_hz > 0:
            raise DataError("peak FWHM must be positive, got {}".format(fwhm_hz))
        if not amplitude >= 0:
            raise DataError("peak amplitude must be non negative, got {}".format(amplitude))
        return super().__new__(cls, float(center_hz), float(fwhm_hz), float(amplitude))

    def __str__(self):
        return "({:.4f} GHz, FWHM {:.4f} GHz, A {:.2f})".format(
            self.center_hz*1e-9, self.fwhm_hz*1e-9, self.amplitude)


def lorentzian_value(peak: LorentzianPeak, freq_hz):
    """
    Intensity of the peak at the given frequency (scalar or array).

    A (G/2)^2 / ((f - c)^2 + (G/2)^2): equals A at the center and A/2 at
    center +/- G/2.
    """
    half = 0.5*peak.fwhm_hz
    offset = np.asarray(freq_hz, dtype=float) - peak.center_hz
    value = peak.amplitude*half**2/(offset**2 + half**2)
    if np.ndim(value) == 0:
        return float(value)
    return value


def lorentzian_sum(peaks: list, freq_hz, baseline: float = 0.0) -> np.ndarray:
    """Sum of the profiles of all peaks plus a constant baseline"""
    freqs = np.asarray(freq_hz, dtype=float)
    total = np.full(freqs.shape, float(baseline))
    for peak in peaks:
        total += lorentzian_value(peak, freqs)
    return total


def lorentzian_jacobian(peak: LorentzianPeak, freq_hz) -> np.ndarray:
    """
    Analytic partial derivatives of the profile.

    Returns
    -------
    array of shape (len(freq_hz), 3) with columns d/dcenter, d/dfwhm,
    d/damplitude
    """
    freqs = np.asarray(freq_hz, dtype=float)
    half = 0.5*peak.fwhm_hz
    offset = freqs - peak.center_hz
    denom = offset**2 + half**2
    jac = np.empty((freqs.size, 3))
    jac[:, 0] = 2.0*peak.amplitude*half**2*offset/denom**2
    jac[:, 1] = peak.amplitude*half*offset**2/denom**2
    jac[:, 2] = half**2/denom
    return jac


class GroundTruth():
    """
    A Rayleigh line with its Stokes and anti-Stokes lines.

    Brillouin peaks are symmetric about the Rayleigh center by construction;
    the relative shift and width are kept as attributes because every
    benchmark compares against them.
    """

    def __init__(self, peaks: list, brillouin_shift_hz: float,
                 brillouin_fwhm_hz: float, background: float = 0.0):
        """
        Parameters
        ----------
        peaks : list
            LorentzianPeak list ordered as (Rayleigh, Stokes, anti-Stokes)
        brillouin_shift_hz : float
            the true relative shift
        brillouin_fwhm_hz : float
            the true FWHM of the Brillouin lines
        background : float
            constant offset added to every pixel, defaults to zero
        """
        if len(peaks) != 3:
            raise DataError("a ground truth needs Rayleigh, Stokes and anti-Stokes peaks")
        rayleigh, stokes, anti_stokes = peaks
        tol = 1e-9*max(abs(brillouin_shift_hz), 1.0)
        if abs((anti_stokes.center_hz - rayleigh.center_hz) -
               (rayleigh.center_hz - stokes.center_hz)) > tol:
            raise DataError("Stokes and anti-Stokes lines are not symmetric about the Rayleigh line")
        if abs((anti_stokes.center_hz - rayleigh.center_hz) - brillouin_shift_hz) > tol:
            raise DataError("peak positions disagree with the declared shift")
        if not brillouin_fwhm_hz > 0:
            raise DataError("Brillouin FWHM must be positive")

        self.peaks = list(peaks)
        self.brillouin_shift_hz = float(brillouin_shift_hz)
        self.brillouin_fwhm_hz = float(brillouin_fwhm_hz)
        self.background = float(background)

    @classmethod
    def symmetric(cls, shift_hz: float, brillouin_fwhm_hz: float,
                  brillouin_amplitude: float, rayleigh_amplitude: float,
                  rayleigh_fwhm_hz: float = None, rayleigh_center_hz: float = 0.0,
                  background: float = 0.0):
        """Build the three peaks from the shift, widths and amplitudes"""
        if rayleigh_fwhm_hz is None:
            rayleigh_fwhm_hz = brillouin_fwhm_hz
        peaks = [
            LorentzianPeak(rayleigh_center_hz, rayleigh_fwhm_hz, rayleigh_amplitude),
            LorentzianPeak(rayleigh_center_hz - shift_hz, brillouin_fwhm_hz, brillouin_amplitude),
            LorentzianPeak(rayleigh_center_hz + shift_hz, brillouin_fwhm_hz, brillouin_amplitude),
        ]
        return cls(peaks, shift_hz, brillouin_fwhm_hz, background)

    @property
    def rayleigh(self) -> LorentzianPeak:
        return self.peaks[0]

    @property
    def brillouin(self) -> list:
        """Stokes and anti-Stokes peaks"""
        return self.peaks[1:]

    @property
    def brillouin_amplitude(self) -> float:
        return self.peaks[1].amplitude

    @property
    def relative_intensity(self) -> float:
        """Brillouin over Rayleigh amplitude (I+- of the bound)"""
        if self.rayleigh.amplitude == 0:
            return np.inf
        return self.brillouin_amplitude/self.rayleigh.amplitude

    def __str__(self):
        return "GroundTruth shift {:.4f} GHz, FWHM {:.4f} GHz, peaks [{}]".format(
            self.brillouin_shift_hz*1e-9, self.brillouin_fwhm_hz*1e-9,
            ", ".join(str(p) for p in self.peaks))


def reference_truth() -> GroundTruth:
    """
    The simulation setup: Rayleigh line of 10^4 counts at the center,
    Brillouin lines of 10^3 counts at -/+ 10 GHz, every FWHM 1 GHz.
    """
    return GroundTruth.symmetric(shift_hz=10e9, brillouin_fwhm_hz=1e9,
                                 brillouin_amplitude=1e3, rayleigh_amplitude=1e4)
