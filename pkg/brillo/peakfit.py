# File: peakfit.py
# Date: 07-10-2026
#
"""
Lorentzian fitting of Brillouin spectra.

The model is a sum of Lorentzian peaks over a constant baseline. It is fitted
by damped Gauss-Newton (Levenberg-Marquardt with Marquardt's diagonal
scaling) over the unmasked pixels. Internally frequencies are measured in
pixels so that the normal equations stay well scaled.

From the fitted peaks the Brillouin shift is half the distance between the
anti-Stokes and Stokes centers; a masked or absent Rayleigh line never
enters it. The RMS fit error is expressed in percent of the mean fitted
Brillouin amplitude.
"""

# General imports
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks, peak_prominences, peak_widths

# Project imports
from .errors import DataError
from .lineshape import GroundTruth, LorentzianPeak, lorentzian_jacobian, lorentzian_sum
from .spectrum import Spectrum
from .trace import logger

PARAMS_PER_PEAK = 3
SMOOTHING_PIXELS = 5
REFINE_PIXELS = 2
MIN_FWHM_PIXELS = 1e-6
MAX_DAMPING = 1e16


class PeakRole(str, Enum):
    RAYLEIGH = "rayleigh"
    STOKES = "stokes"
    ANTI_STOKES = "anti-stokes"


def default_roles(peaks: list) -> list:
    """
    Roles from the center order: three peaks are Stokes, Rayleigh and
    anti-Stokes, two are Stokes and anti-Stokes, a single one is the
    anti-Stokes line measured from 0 Hz.
    """
    order = np.argsort([p.center_hz for p in peaks], kind="stable")
    by_rank = {
        1: [PeakRole.ANTI_STOKES],
        2: [PeakRole.STOKES, PeakRole.ANTI_STOKES],
        3: [PeakRole.STOKES, PeakRole.RAYLEIGH, PeakRole.ANTI_STOKES],
    }
    if len(peaks) not in by_rank:
        raise DataError("roles of {} peaks must be given explicitly".format(len(peaks)))
    roles = [None]*len(peaks)
    for rank, index in enumerate(order):
        roles[index] = by_rank[len(peaks)][rank]
    return roles


@dataclass
class FitModel:
    """
    Initial guess and constraints of a fit.

    fixed_mask : one flag per parameter, ordered (center, fwhm, amplitude)
        per peak then the baseline; True holds the parameter constant
    fit_region : boolean vector, True on the pixels taking part (combined
        with the mask of the spectrum)
    roles : PeakRole per peak, default_roles() when None
    """
    peaks: list
    baseline: float = 0.0
    fixed_mask: Optional[np.ndarray] = None
    fit_region: Optional[np.ndarray] = None
    roles: Optional[list] = None

    def __post_init__(self):
        if not self.peaks:
            raise DataError("a fit model needs at least one peak")
        self.peaks = [LorentzianPeak(*p) for p in self.peaks]
        n_params = PARAMS_PER_PEAK*len(self.peaks) + 1
        if self.fixed_mask is None:
            self.fixed_mask = np.zeros(n_params, dtype=bool)
        self.fixed_mask = np.asarray(self.fixed_mask, dtype=bool)
        if self.fixed_mask.shape != (n_params,):
            raise DataError("fixed mask needs {} flags, got {}".format(n_params, self.fixed_mask.size))
        if self.roles is None:
            self.roles = default_roles(self.peaks)
        self.roles = [PeakRole(r) for r in self.roles]
        if len(self.roles) != len(self.peaks):
            raise DataError("one role per peak is needed")

    @property
    def n_free(self) -> int:
        return int((~self.fixed_mask).sum())


@dataclass(frozen=True)
class FitOptions:
    """
    tol : relative change of the sum of squares below which the fit stops
    saturation_count : detector full scale; when set, pixels at or above
        saturation_fraction of it are masked before fitting
    """
    max_iter: int = 200
    tol: float = 1e-10
    initial_damping: float = 1e-3
    saturation_count: Optional[float] = None
    saturation_fraction: float = 0.995

    def __post_init__(self):
        if self.max_iter < 1:
            raise DataError("at least one iteration is needed")
        if not self.tol >= 0:
            raise DataError("tolerance cannot be negative")
        if not self.initial_damping > 0:
            raise DataError("initial damping must be positive")
        if self.saturation_count is not None and not self.saturation_count > 0:
            raise DataError("saturation count must be positive")
        if not 0 < self.saturation_fraction <= 1:
            raise DataError("saturation fraction must be in (0, 1]")


FIT_CSV_HEADER = ["shift_ghz", "fwhm_ghz", "rms_error_pct", "converged", "iterations"]


@dataclass
class FitResult:
    peaks: list
    baseline: float
    shift_hz: float
    fwhm_hz: float
    rms_error_pct: float
    converged: bool
    iterations: int
    roles: list = field(default_factory=list)
    sse: float = math.nan
    sse_history: list = field(default_factory=list)

    def __str__(self):
        return "Fit shift {:.6f} GHz, FWHM {:.6f} GHz, RMS error {:.3f}%, {} after {} iterations".format(
            self.shift_hz*1e-9, self.fwhm_hz*1e-9, self.rms_error_pct,
            "converged" if self.converged else "NOT converged", self.iterations)

    def csv_row(self) -> list:
        return ["{:.10g}".format(self.shift_hz*1e-9), "{:.10g}".format(self.fwhm_hz*1e-9),
                "{:.10g}".format(self.rms_error_pct), "true" if self.converged else "false",
                str(self.iterations)]

    def to_text(self) -> str:
        """Flat key = value form"""
        lines = [
            "shift_ghz = {:.6f}".format(self.shift_hz*1e-9),
            "fwhm_ghz = {:.6f}".format(self.fwhm_hz*1e-9),
            "rms_error_pct = {:.4f}".format(self.rms_error_pct),
            "converged = {}".format("true" if self.converged else "false"),
            "iterations = {}".format(self.iterations),
            "baseline = {:.6g}".format(self.baseline),
        ]
        for i, (peak, role) in enumerate(zip(self.peaks, self.roles)):
            lines.append("peak{}.role = {}".format(i, role.value))
            lines.append("peak{}.center_ghz = {:.6f}".format(i, peak.center_hz*1e-9))
            lines.append("peak{}.fwhm_ghz = {:.6f}".format(i, peak.fwhm_hz*1e-9))
            lines.append("peak{}.amplitude = {:.6g}".format(i, peak.amplitude))
        return "\n".join(lines) + "\n"


def saturation_mask(spectrum: Spectrum, max_count: float, fraction: float = 0.995) -> np.ndarray:
    """True on the pixels at or above fraction * max_count"""
    if not max_count > 0:
        raise DataError("max count must be positive")
    return np.asarray(spectrum.intensities >= fraction*max_count)


def _smooth(values: np.ndarray) -> np.ndarray:
    return uniform_filter1d(values, SMOOTHING_PIXELS, mode="nearest")


def _climb(values: np.ndarray, index: int) -> int:
    """Walk uphill to the nearest local maximum"""
    while True:
        best = index
        if index > 0 and values[index - 1] > values[best]:
            best = index - 1
        if index < values.size - 1 and values[index + 1] > values[best]:
            best = index + 1
        if best == index:
            return index
        index = best


def _half_width(values: np.ndarray, index: int, max_width: float) -> float:
    """
    Width in pixels at half prominence, clamped to [1, max_width].

    scipy warns (RuntimeWarning subclasses) on flat tops and zero
    prominences; those give a width of 0 and end at the lower clamp.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        width = float(peak_widths(values, [index], rel_height=0.5)[0][0])
    if not np.isfinite(width):
        width = 1.0
    return min(max(width, 1.0), max_width)


def initial_guess(spectrum: Spectrum, n_peaks: int, hints=None) -> FitModel:
    """
    Starting point of a fit.

    Parameters
    ----------
    spectrum : Spectrum
        masked pixels are ignored
    n_peaks : int
        number of peaks to look for
    hints : GroundTruth or list of LorentzianPeak
        approximate peaks; when given they are used unchanged and only the
        baseline is estimated

    Return
    ------
    FitModel
    """
    if n_peaks < 1:
        raise DataError("at least one peak is needed")
    active = spectrum.active()
    if not active.any():
        raise DataError("every pixel is masked")
    raw = np.array(spectrum.intensities)
    raw[~active] = raw[active].min()
    smooth = _smooth(raw)
    baseline = float(smooth[active].min())

    if hints is not None:
        peaks = list(hints.peaks if isinstance(hints, GroundTruth) else hints)
        if len(peaks) != n_peaks:
            raise DataError("{} hints given for {} peaks".format(len(peaks), n_peaks))
        return FitModel(peaks, baseline)

    search = np.where(active, smooth, baseline)
    candidates, _ = find_peaks(search)
    if candidates.size:
        prominences = peak_prominences(search, candidates)[0]
        candidates = candidates[prominences > 0]
        prominences = prominences[prominences > 0]
    if candidates.size < n_peaks:
        raise DataError("found {} maxima, {} peaks requested".format(candidates.size, n_peaks))
    chosen = candidates[np.argsort(-prominences, kind="stable")[:n_peaks]]

    filled = np.where(active, raw, baseline)
    step = spectrum.step_hz
    max_width = len(spectrum)/4.0
    peaks = []
    for index in sorted(chosen):
        lo = max(0, index - REFINE_PIXELS)
        hi = min(len(spectrum), index + REFINE_PIXELS + 1)
        window = np.where(active[lo:hi], filled[lo:hi], -np.inf)
        top = _climb(filled, lo + int(np.argmax(window)))
        width = _half_width(filled, top, max_width)
        amplitude = max(float(raw[top]) - baseline, 0.0)
        peaks.append(LorentzianPeak(spectrum.frequencies_hz[top], width*step, amplitude))
    logger.debug("initial guess: {}, baseline {:.4g}".format(", ".join(str(p) for p in peaks), baseline))
    return FitModel(peaks, baseline)


class LorentzianFitter():
    """
    Levenberg-Marquardt least squares on a multi-Lorentzian model.

    The normal equations (J^T J + mu diag(J^T J)) delta = J^T r are solved
    at each trial; mu is multiplied by 10 on a rejected step and divided by
    10 on an accepted one.
    """

    def __init__(self, options: FitOptions = FitOptions()):
        self.options = options

    def _region(self, spectrum: Spectrum, model: FitModel) -> np.ndarray:
        region = spectrum.active()
        if model.fit_region is not None:
            fit_region = np.asarray(model.fit_region, dtype=bool)
            if fit_region.shape != region.shape:
                raise DataError("fit region length differs from the spectrum")
            region = region & fit_region
        if self.options.saturation_count is not None:
            saturated = saturation_mask(spectrum, self.options.saturation_count,
                                        self.options.saturation_fraction)
            if saturated.any():
                logger.info("{} saturated pixels excluded from the fit".format(int(saturated.sum())))
            region = region & ~saturated
        return region

    @staticmethod
    def _unpack(theta: np.ndarray) -> tuple:
        n = (theta.size - 1)//PARAMS_PER_PEAK
        peaks = [LorentzianPeak(*theta[PARAMS_PER_PEAK*i:PARAMS_PER_PEAK*(i + 1)]) for i in range(n)]
        return peaks, float(theta[-1])

    @staticmethod
    def _project(theta: np.ndarray) -> np.ndarray:
        theta = theta.copy()
        widths = theta[1:-1:PARAMS_PER_PEAK]
        amplitudes = theta[2:-1:PARAMS_PER_PEAK]
        theta[1:-1:PARAMS_PER_PEAK] = np.maximum(widths, MIN_FWHM_PIXELS)
        theta[2:-1:PARAMS_PER_PEAK] = np.maximum(amplitudes, 0.0)
        return theta

    @classmethod
    def _residual(cls, theta, x, y):
        peaks, baseline = cls._unpack(theta)
        return y - lorentzian_sum(peaks, x, baseline)

    @classmethod
    def _jacobian(cls, theta, x):
        peaks, _ = cls._unpack(theta)
        jac = np.empty((x.size, theta.size))
        for i, peak in enumerate(peaks):
            jac[:, PARAMS_PER_PEAK*i:PARAMS_PER_PEAK*(i + 1)] = lorentzian_jacobian(peak, x)
        jac[:, -1] = 1.0
        return jac

    def fit(self, spectrum: Spectrum, model: FitModel) -> FitResult:
        """
        Parameters
        ----------
        spectrum : Spectrum
        model : FitModel
            initial guess

        Return
        ------
        FitResult; converged is False when max_iter is reached or when no
        damped system could be solved
        """
        region = self._region(spectrum, model)
        free = ~model.fixed_mask
        if region.sum() < 3*model.n_free:
            raise DataError("{} pixels in the fit region, at least {} needed for {} free parameters".format(
                int(region.sum()), 3*model.n_free, model.n_free))

        # Pixel units: x = f/step
        step = spectrum.step_hz
        x = spectrum.frequencies_hz[region]/step
        y = spectrum.intensities[region]
        theta = np.empty(PARAMS_PER_PEAK*len(model.peaks) + 1)
        for i, peak in enumerate(model.peaks):
            theta[PARAMS_PER_PEAK*i:PARAMS_PER_PEAK*(i + 1)] = (
                peak.center_hz/step, peak.fwhm_hz/step, peak.amplitude)
        theta[-1] = model.baseline
        theta = self._project(theta)

        residual = self._residual(theta, x, y)
        sse = float(residual @ residual)
        history = [sse]
        mu = self.options.initial_damping
        converged = False
        solved_once = False
        iterations = 0

        for iterations in range(1, self.options.max_iter + 1):
            if sse == 0:
                converged = True
                break
            jac = self._jacobian(theta, x)[:, free]
            normal = jac.T @ jac
            gradient = jac.T @ residual
            scaling = np.diag(normal).copy()
            scaling[scaling <= 0] = 1.0

            accepted = False
            while mu <= MAX_DAMPING:
                try:
                    delta = np.linalg.solve(normal + mu*np.diag(scaling), gradient)
                except np.linalg.LinAlgError:
                    mu *= 10.0
                    continue
                if not np.all(np.isfinite(delta)):
                    mu *= 10.0
                    continue
                solved_once = True
                trial = theta.copy()
                trial[free] += delta
                trial = self._project(trial)
                trial_residual = self._residual(trial, x, y)
                trial_sse = float(trial_residual @ trial_residual)
                if trial_sse < sse:
                    accepted = True
                    break
                mu *= 10.0

            if not accepted:
                # Local minimum: no damping improves the sum of squares
                converged = solved_once
                break

            change = (sse - trial_sse)/sse
            theta, residual, sse = trial, trial_residual, trial_sse
            history.append(sse)
            mu = max(mu/10.0, 1e-15)
            if change <= self.options.tol or sse == 0:
                converged = True
                break

        if not converged:
            logger.warning("Lorentzian fit did not converge after {} iterations".format(iterations))

        peaks_px, baseline = self._unpack(theta)
        peaks = [LorentzianPeak(p.center_hz*step, p.fwhm_hz*step, p.amplitude) for p in peaks_px]
        shift, fwhm, amplitude = brillouin_estimates(peaks, model.roles)
        rms = math.sqrt(sse/x.size)
        rms_pct = 100.0*rms/amplitude if amplitude > 0 else math.inf
        return FitResult(peaks=peaks, baseline=baseline, shift_hz=shift, fwhm_hz=fwhm,
                         rms_error_pct=rms_pct, converged=converged, iterations=iterations,
                         roles=list(model.roles), sse=sse, sse_history=history)


def brillouin_estimates(peaks: list, roles: list) -> tuple:
    """
    Shift, mean Brillouin FWHM and mean Brillouin amplitude of fitted peaks.

    The shift is half the anti-Stokes / Stokes separation when both lines
    are present, otherwise the distance of the single Brillouin line from
    the Rayleigh line (or from 0 Hz without one).
    """
    by_role = {}
    for peak, role in zip(peaks, roles):
        by_role.setdefault(PeakRole(role), []).append(peak)
    stokes = by_role.get(PeakRole.STOKES, [])
    anti_stokes = by_role.get(PeakRole.ANTI_STOKES, [])
    brillouin = stokes + anti_stokes
    if not brillouin:
        raise DataError("no Brillouin peak among the fitted peaks")
    if stokes and anti_stokes:
        shift = 0.5*(anti_stokes[0].center_hz - stokes[0].center_hz)
    else:
        rayleigh = by_role.get(PeakRole.RAYLEIGH)
        origin = rayleigh[0].center_hz if rayleigh else 0.0
        shift = abs(brillouin[0].center_hz - origin)
    fwhm = float(np.mean([p.fwhm_hz for p in brillouin]))
    amplitude = float(np.mean([p.amplitude for p in brillouin]))
    return abs(shift), fwhm, amplitude


def fit(spectrum: Spectrum, model: FitModel, options: FitOptions = FitOptions()) -> FitResult:
    """Least squares fit of 'model' to 'spectrum'"""
    return LorentzianFitter(options).fit(spectrum, model)


def fit_spectrum(spectrum: Spectrum, n_peaks: int = 3, options: FitOptions = FitOptions(),
                 hints=None) -> FitResult:
    """initial_guess followed by fit"""
    return fit(spectrum, initial_guess(spectrum, n_peaks, hints), options)


def speed_of_sound(shift_hz: float, wavelength_m: float, refractive_index: float,
                   scattering_angle_rad: float = math.pi) -> float:
    """
    Acoustic velocity from a Brillouin shift.

    v = Omega lambda / (2 n sin(theta/2)), in m/s for Omega in Hz and
    lambda in meters.
    """
    _check_kinematics(wavelength_m, refractive_index, scattering_angle_rad)
    return shift_hz*wavelength_m/(2.0*refractive_index*math.sin(0.5*scattering_angle_rad))


def shift_for_speed(speed_m_s: float, wavelength_m: float, refractive_index: float,
                    scattering_angle_rad: float = math.pi) -> float:
    """Inverse of speed_of_sound: Omega = 2 n v sin(theta/2) / lambda"""
    _check_kinematics(wavelength_m, refractive_index, scattering_angle_rad)
    return 2.0*refractive_index*speed_m_s*math.sin(0.5*scattering_angle_rad)/wavelength_m


def _check_kinematics(wavelength_m, refractive_index, angle):
    if not 0 < angle <= math.pi:
        raise DataError("scattering angle must be in (0, pi], got {}".format(angle))
    if not refractive_index >= 1:
        raise DataError("refractive index must be at least 1, got {}".format(refractive_index))
    if not wavelength_m > 0:
        raise DataError("wavelength must be positive")
