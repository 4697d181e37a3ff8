# File: config.py
# Date: 11-10-2026
#
"""
Key-value configuration of the command line.

A configuration file is a list of ``key = value`` lines, UTF-8, with ``#``
starting a comment. Keys are ``section.name``; the complete set, with
defaults and units, is the KEYS table below. Unknown keys and values that
do not parse are errors. Physical quantities use convenient units (GHz,
um, mm, nm, degrees) and are converted to SI when the domain objects are
built.

Overrides given as ``key=value`` strings are applied after the file.
"""

# General imports
import math
import os

# Project imports
from .bench import BenchConfig, Method
from .detector import DetectorModel, box_response
from .errors import BrilloError, UsageError
from .lineshape import GroundTruth
from .mer import EntropyForm, MerConfig
from .noise import SnrConvention
from .peakfit import FitOptions
from .trace import logger
from .wavelet import Boundary, ThresholdMode, ThresholdRule, WaveletConfig, WaveletFamily


class _Float():
    def parse(self, text):
        value = float(text)
        if not math.isfinite(value):
            raise ValueError("not a finite number")
        return value

    def format(self, value):
        return repr(float(value))


class _Int():
    def parse(self, text):
        return int(text)

    def format(self, value):
        return str(int(value))


class _Bool():
    TRUE = ("true", "yes", "on", "1")
    FALSE = ("false", "no", "off", "0")

    def parse(self, text):
        lowered = text.lower()
        if lowered in self.TRUE:
            return True
        if lowered in self.FALSE:
            return False
        raise ValueError("expected true or false")

    def format(self, value):
        return "true" if value else "false"


class _Choice():
    def __init__(self, kind):
        self.kind = kind

    def parse(self, text):
        return self.kind(text)

    def format(self, value):
        return self.kind(value).value


class _Optional():
    """A value or a keyword standing for None"""

    def __init__(self, inner, keyword: str):
        self.inner = inner
        self.keyword = keyword

    def parse(self, text):
        if text.lower() == self.keyword:
            return None
        return self.inner.parse(text)

    def format(self, value):
        return self.keyword if value is None else self.inner.format(value)


class _List():
    def __init__(self, inner):
        self.inner = inner

    def parse(self, text):
        if not text.strip():
            return ()
        return tuple(self.inner.parse(item.strip()) for item in text.split(","))

    def format(self, value):
        return ",".join(self.inner.format(item) for item in value)


class _Table():
    """snr:scale pairs separated by commas"""

    def parse(self, text):
        table = {}
        for item in filter(None, (part.strip() for part in text.split(","))):
            key, sep, value = item.partition(":")
            if not sep:
                raise ValueError("expected snr:value pairs")
            table[float(key)] = float(value)
        return table

    def format(self, value):
        return ",".join("{}:{}".format(repr(k), repr(v)) for k, v in sorted(value.items()))


FLOAT = _Float()
INT = _Int()
BOOL = _Bool()

# key -> (converter, default text, description)
KEYS = {
    "detector.pixel_size_um": (FLOAT, "6.5", "pixel size (Delta)"),
    "detector.detector_width_mm": (FLOAT, "16.6", "detector width (X)"),
    "detector.num_pixels": (INT, "120", "active pixels (N)"),
    "detector.bandwidth_ghz": (FLOAT, "60.0", "frequency span of the active pixels"),
    "detector.response_box_pixels": (INT, "1", "moving-average response width, 1 = identity"),
    "detector.response_fwhm_ghz": (FLOAT, "0.0", "response FWHM (gamma)"),

    "truth.shift_ghz": (FLOAT, "10.0", "Brillouin shift"),
    "truth.brillouin_fwhm_ghz": (FLOAT, "1.0", "Brillouin FWHM"),
    "truth.brillouin_amplitude": (FLOAT, "1000.0", "Brillouin peak height (counts)"),
    "truth.rayleigh_amplitude": (FLOAT, "10000.0", "Rayleigh peak height (counts)"),
    "truth.rayleigh_fwhm_ghz": (FLOAT, "1.0", "Rayleigh FWHM"),
    "truth.background": (FLOAT, "0.0", "constant background (counts)"),

    "noise.snr": (_Optional(FLOAT, "none"), "none", "SNR of the noisy copy, none = noiseless"),
    "noise.sigma": (_Optional(FLOAT, "auto"), "auto", "noise deviation, auto = from noise.snr"),
    "noise.convention": (_Choice(SnrConvention), "peak-based", "peak-based or per-pixel-average"),
    "noise.seed": (INT, "0", "base seed of every random draw"),

    "simulate.subsamples": (INT, "1", "samples per pixel when synthesizing"),

    "mer.lambda": (_Optional(FLOAT, "auto"), "auto", "Lagrange multiplier, auto = lambda_scale rule"),
    "mer.lambda_scale": (FLOAT, "2.0", "lambda / (N_active mean(sigma))"),
    "mer.lambda_search": (BOOL, "false", "bisection of lambda towards chi2 = chi0_sq"),
    "mer.chi0_sq": (FLOAT, "1.0", "constraint level"),
    "mer.termination_threshold": (FLOAT, "0.01", "gradient angle metric threshold"),
    "mer.max_iterations": (INT, "2000", "iteration limit"),
    "mer.num_conjugate_dirs": (INT, "2", "directions kept conjugate (r)"),
    "mer.positivity_floor": (FLOAT, "1e-12", "lowest admissible intensity"),
    "mer.wolfe_c1": (FLOAT, "0.0001", "sufficient increase constant"),
    "mer.wolfe_c2": (FLOAT, "0.9", "curvature constant"),
    "mer.max_line_evaluations": (INT, "40", "line search budget"),
    "mer.entropy_form": (_Choice(EntropyForm), "skilling-gull", "skilling-gull or paper-shannon"),
    "mer.prior_fwhm_ghz": (FLOAT, "1.0", "width of the prior peaks given on the command line"),
    "mer.prior_background_fraction": (FLOAT, "0.1", "flat share of the default model"),

    "wavelet.family": (_Choice(WaveletFamily), "daubechies", "daubechies or symlet"),
    "wavelet.order": (INT, "4", "filter order"),
    "wavelet.levels": (_Optional(INT, "auto"), "auto", "decomposition levels"),
    "wavelet.threshold_mode": (_Choice(ThresholdMode), "hard", "hard or soft"),
    "wavelet.threshold_rule": (_Choice(ThresholdRule), "donoho-universal",
                               "donoho-universal, paper-universal or level-dependent"),
    "wavelet.noise_level": (_Optional(FLOAT, "auto"), "auto", "noise level, auto = MAD estimate"),
    "wavelet.boundary": (_Choice(Boundary), "symmetric", "symmetric, periodic or zero"),
    "wavelet.threshold_scale": (FLOAT, "1.0", "threshold multiplier"),

    "fit.n_peaks": (INT, "3", "Lorentzians in the model"),
    "fit.max_iter": (INT, "200", "iteration limit"),
    "fit.tol": (FLOAT, "1e-10", "relative change of the sum of squares"),
    "fit.initial_damping": (FLOAT, "0.001", "initial Levenberg-Marquardt damping"),
    "fit.saturation_count": (_Optional(FLOAT, "none"), "none", "detector full scale for auto-masking"),
    "fit.saturation_fraction": (FLOAT, "0.995", "saturation threshold as a fraction of full scale"),

    "bench.snr_grid": (_List(FLOAT), "1,2,3,4,5,6,7,8,9,10", "SNR values"),
    "bench.realizations": (INT, "500", "realizations per SNR"),
    "bench.methods": (_List(_Choice(Method)), "none,wa,mer", "methods compared"),
    "bench.regenerate_infeasible": (BOOL, "true", "redraw spectra without MER solution"),
    "bench.max_regenerations": (INT, "100", "redraws allowed per realization"),
    "bench.workers": (INT, "1", "worker processes"),
    "bench.lambda_scale_table": (_Table(), "1:0.25,2:0.5", "per-SNR MER lambda scale, snr:scale,..."),
    "bench.prior_snrs": (_Optional(_List(FLOAT), "all"), "all", "SNRs using the true-peak prior"),
    "bench.prior_background_fraction": (FLOAT, "0.4", "flat share of the bench prior"),
    "bench.prior_offset_ghz": (FLOAT, "0.0", "outward displacement of the Brillouin hints"),
    "bench.fit_with_hints": (BOOL, "false", "seed fits with the true peaks"),
}


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


class Settings():
    """
    Effective configuration: defaults, then a file, then overrides.
    """

    def __init__(self):
        self.values = {key: conv.parse(default) for key, (conv, default, _) in KEYS.items()}
        self.sources = {key: "default" for key in KEYS}

    def __getitem__(self, key: str):
        if key not in self.values:
            raise UsageError("unknown configuration key '{}'".format(key))
        return self.values[key]

    def set(self, key: str, text: str, source: str = "override"):
        key = key.strip()
        if key not in KEYS:
            raise UsageError("{}: unknown configuration key '{}'".format(source, key))
        converter = KEYS[key][0]
        try:
            self.values[key] = converter.parse(text.strip())
        except ValueError as err:
            raise UsageError("{}: bad value '{}' for '{}': {}".format(source, text.strip(), key, err))
        self.sources[key] = source

    def read_text(self, text: str, source: str = "<text>"):
        """Apply every 'key = value' line of a configuration text"""
        for line_no, line in enumerate(text.splitlines(), start=1):
            content = _strip_comment(line)
            if not content:
                continue
            key, sep, value = content.partition("=")
            if not sep:
                raise UsageError("{} line {}: expected 'key = value'".format(source, line_no))
            self.set(key, value, "{} line {}".format(source, line_no))

    def read_file(self, path: str):
        if not os.path.exists(path):
            raise UsageError("configuration file '{}' not found".format(path))
        with open(path, encoding="utf-8") as cfg:
            self.read_text(cfg.read(), path)
        logger.debug("configuration read from '{}'".format(path))

    def apply_overrides(self, overrides):
        """'key=value' strings, applied in order"""
        for item in overrides or ():
            key, sep, value = item.partition("=")
            if not sep:
                raise UsageError("override '{}' is not key=value".format(item))
            self.set(key, value)

    @classmethod
    def load(cls, path: str = None, overrides=()):
        settings = cls()
        if path:
            settings.read_file(path)
        settings.apply_overrides(overrides)
        return settings

    def dump(self) -> str:
        """The effective configuration in the file format"""
        lines = []
        section = None
        for key, (conv, _, description) in KEYS.items():
            current = key.split(".", 1)[0]
            if current != section:
                if section is not None:
                    lines.append("")
                lines.append("# {}".format(current))
                section = current
            lines.append("{} = {}  # {}".format(key, conv.format(self.values[key]), description))
        return "\n".join(lines) + "\n"

    #
    # Domain objects
    #

    def detector(self) -> DetectorModel:
        try:
            num_pixels = self["detector.num_pixels"]
            box = self["detector.response_box_pixels"]
            response = None if box == 1 else box_response(num_pixels, box)
            return DetectorModel(pixel_size_m=self["detector.pixel_size_um"]*1e-6,
                                 detector_width_m=self["detector.detector_width_mm"]*1e-3,
                                 num_pixels=num_pixels,
                                 bandwidth_hz=self["detector.bandwidth_ghz"]*1e9,
                                 response=response,
                                 response_fwhm_hz=self["detector.response_fwhm_ghz"]*1e9)
        except BrilloError as err:
            raise UsageError("detector settings: {}".format(err))

    def truth(self) -> GroundTruth:
        try:
            return GroundTruth.symmetric(shift_hz=self["truth.shift_ghz"]*1e9,
                                         brillouin_fwhm_hz=self["truth.brillouin_fwhm_ghz"]*1e9,
                                         brillouin_amplitude=self["truth.brillouin_amplitude"],
                                         rayleigh_amplitude=self["truth.rayleigh_amplitude"],
                                         rayleigh_fwhm_hz=self["truth.rayleigh_fwhm_ghz"]*1e9,
                                         background=self["truth.background"])
        except BrilloError as err:
            raise UsageError("truth settings: {}".format(err))

    def mer_config(self, prior_model=None) -> MerConfig:
        try:
            return MerConfig(lambda_=self["mer.lambda"],
                             lambda_scale=self["mer.lambda_scale"],
                             chi0_sq=self["mer.chi0_sq"],
                             termination_threshold=self["mer.termination_threshold"],
                             max_iterations=self["mer.max_iterations"],
                             num_conjugate_dirs=self["mer.num_conjugate_dirs"],
                             positivity_floor=self["mer.positivity_floor"],
                             prior_model=prior_model,
                             wolfe_c1=self["mer.wolfe_c1"],
                             wolfe_c2=self["mer.wolfe_c2"],
                             entropy_form=self["mer.entropy_form"],
                             lambda_search=self["mer.lambda_search"],
                             max_line_evaluations=self["mer.max_line_evaluations"])
        except BrilloError as err:
            raise UsageError("mer settings: {}".format(err))

    def wavelet_config(self) -> WaveletConfig:
        try:
            return WaveletConfig(family=self["wavelet.family"],
                                 order=self["wavelet.order"],
                                 levels=self["wavelet.levels"],
                                 threshold_mode=self["wavelet.threshold_mode"],
                                 threshold_rule=self["wavelet.threshold_rule"],
                                 noise_level=self["wavelet.noise_level"],
                                 boundary=self["wavelet.boundary"],
                                 threshold_scale=self["wavelet.threshold_scale"])
        except BrilloError as err:
            raise UsageError("wavelet settings: {}".format(err))

    def fit_options(self) -> FitOptions:
        try:
            return FitOptions(max_iter=self["fit.max_iter"],
                              tol=self["fit.tol"],
                              initial_damping=self["fit.initial_damping"],
                              saturation_count=self["fit.saturation_count"],
                              saturation_fraction=self["fit.saturation_fraction"])
        except BrilloError as err:
            raise UsageError("fit settings: {}".format(err))

    def bench_config(self) -> BenchConfig:
        try:
            return BenchConfig(truth=self.truth(),
                               detector=self.detector(),
                               snr_grid=self["bench.snr_grid"],
                               realizations=self["bench.realizations"],
                               methods=self["bench.methods"],
                               regenerate_infeasible=self["bench.regenerate_infeasible"],
                               max_regenerations=self["bench.max_regenerations"],
                               base_seed=self["noise.seed"],
                               snr_convention=self["noise.convention"],
                               subsamples=self["simulate.subsamples"],
                               mer_config=self.mer_config(),
                               wavelet_config=self.wavelet_config(),
                               fit_options=self.fit_options(),
                               lambda_scale_table=self["bench.lambda_scale_table"],
                               prior_snrs=self["bench.prior_snrs"],
                               prior_background_fraction=self["bench.prior_background_fraction"],
                               prior_offset_hz=self["bench.prior_offset_ghz"]*1e9,
                               fit_with_hints=self["bench.fit_with_hints"],
                               workers=self["bench.workers"])
        except UsageError:
            raise
        except BrilloError as err:
            raise UsageError("bench settings: {}".format(err))
