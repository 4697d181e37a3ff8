# File: detector.py
# Date: 19-10-2026
#
"""
Detector geometry: the spectrometer disperses the light over a row of
pixels and each pixel integrates a small band of frequencies.
"""

# Imports
import numpy as np

# Project imports
from .errors import DataError
from .trace import logger


class DetectorModel():
    """
    Pixelated detector behind a dispersive spectrometer.

    The dispersion scale alpha links the position x on the detector to the
    optical frequency (x ~ alpha * omega) and is derived from the active
    region: alpha = num_pixels * pixel_size / bandwidth.
    The active region may be a subset of the detector width.
    """

    def __init__(self, pixel_size_m: float = 6.5e-6, detector_width_m: float = 16.6e-3,
                 num_pixels: int = 120, bandwidth_hz: float = 60e9,
                 response: np.ndarray = None, response_fwhm_hz: float = 0.0):
        """
        Parameters
        ----------
        pixel_size_m : float
            size of a pixel (Delta)
        detector_width_m : float
            total width of the detector (X)
        num_pixels : int
            number of active pixels (N), at least 4
        bandwidth_hz : float
            frequency span covered by the active pixels
        response : np.ndarray
            N x N non negative system response; None means identity
        response_fwhm_hz : float
            FWHM of the response (gamma), zero for the identity
        """
        if int(num_pixels) < 4:
            raise DataError("a detector needs at least 4 pixels, got {}".format(num_pixels))
        if not pixel_size_m > 0 or not detector_width_m > 0:
            raise DataError("pixel size and detector width must be positive")
        if not bandwidth_hz > 0:
            raise DataError("bandwidth must be positive")
        if response_fwhm_hz < 0:
            raise DataError("response FWHM cannot be negative")

        self.pixel_size_m = float(pixel_size_m)
        self.detector_width_m = float(detector_width_m)
        self.num_pixels = int(num_pixels)
        self.bandwidth_hz = float(bandwidth_hz)

        # Meters per Hz
        self.dispersion_scale = self.num_pixels*self.pixel_size_m/self.bandwidth_hz

        if response is not None:
            response = np.array(response, dtype=float)
            if response.shape != (self.num_pixels, self.num_pixels):
                raise DataError("response must be {0}x{0}, got {1}".format(
                    self.num_pixels, response.shape))
            if np.any(response < 0):
                raise DataError("response entries must be non negative")
            if np.array_equal(response, np.eye(self.num_pixels)):
                response = None
        if response is None and response_fwhm_hz != 0:
            logger.warning("identity response: response FWHM forced to 0")
            response_fwhm_hz = 0.0
        self.response = response
        self.response_fwhm_hz = float(response_fwhm_hz)

    def __str__(self):
        return "Detector {} px x {:.2f} um, width {:.2f} mm, {:.2f} GHz span, gamma {:.3f} GHz".format(
            self.num_pixels, self.pixel_size_m*1e6, self.detector_width_m*1e3,
            self.bandwidth_hz*1e-9, self.response_fwhm_hz*1e-9)

    @property
    def step_hz(self) -> float:
        """Frequency width of a pixel"""
        return self.bandwidth_hz/self.num_pixels

    @property
    def center_index(self) -> int:
        """Index of the pixel sitting on the Rayleigh line (0 Hz)"""
        return self.num_pixels//2

    def frequency_axis(self) -> np.ndarray:
        """Pixel-center frequencies: (i - i_center) * step"""
        return (np.arange(self.num_pixels) - self.center_index)*self.step_hz

    def with_response(self, response: np.ndarray, response_fwhm_hz: float):
        """Return a copy of the detector with a different system response"""
        return DetectorModel(self.pixel_size_m, self.detector_width_m, self.num_pixels,
                             self.bandwidth_hz, response, response_fwhm_hz)


def box_response(num_pixels: int, width: int = 3) -> np.ndarray:
    """
    Moving-average response of 'width' pixels (odd), truncated at the
    detector edges. Each full row sums to one.
    """
    if width < 1 or width % 2 == 0:
        raise DataError("box width must be a positive odd number, got {}".format(width))
    half = width//2
    response = np.zeros((num_pixels, num_pixels))
    for i in range(num_pixels):
        lo = max(0, i - half)
        hi = min(num_pixels, i + half + 1)
        response[i, lo:hi] = 1.0/width
    return response


def reference_detector() -> DetectorModel:
    """Delta = 6.5 um, X = 16.6 mm, 120 pixels over 60 GHz, ideal response"""
    return DetectorModel()
