# File: cli.py
# Date: 12-10-2026
#
"""
Command line of the toolkit.

    brillo simulate  synthesize the ground truth spectrum (and a noisy copy)
    brillo denoise   reconstruct a CSV spectrum with MER or wavelet shrinkage
    brillo fit       fit Lorentzians to a CSV spectrum
    brillo crlb      write the precision bound against SNR
    brillo bench     run the Monte Carlo comparison of the estimators
    brillo sound     convert a Brillouin shift to a speed of sound

Every subcommand accepts --config FILE, --set KEY=VALUE (repeatable, applied
after the file), --seed, -v and --log-file.

Exit status: 0 success, 1 usage error, 2 data error (including data too
noisy for a maximum entropy solution), 3 non-convergence or interrupted
bench, the partial results being written anyway. Errors are printed on
standard error as ``ERROR <code>: <message>``.
"""

# General imports
import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

# Project imports
from . import bench, crlb, mer, peakfit, trace, wavelet
from .config import Settings
from .errors import BrilloError, ConvergenceError, DataError, UsageError
from .lineshape import LorentzianPeak
from .noise import NoiseSpec, SnrConvention, add_noise, sigma_for_snr
from .plot_utils import plot_spectra
from .spectrum import synthesize
from .spectrum_io import atomic_write_text, read_spectrum, write_spectrum
from .trace import logger


class _Parser(argparse.ArgumentParser):
    """ArgumentParser raising UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message)


def _parse_band(text: str) -> tuple:
    lo, sep, hi = text.partition(":")
    try:
        lo, hi = float(lo), float(hi)
    except ValueError:
        sep = ""
    if not sep or lo > hi:
        raise UsageError("mask band must be lo:hi in GHz with lo <= hi, got '{}'".format(text))
    return lo*1e9, hi*1e9


def _parse_floats(text: str) -> list:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise UsageError("expected a comma separated list of numbers, got '{}'".format(text))


def _key_values(items: list) -> str:
    return "".join("{} = {}\n".format(key, value) for key, value in items)


def _masked(spectrum, bands):
    for band in bands or ():
        lo, hi = _parse_band(band)
        spectrum = spectrum.mask_band(lo, hi)
    return spectrum


#
# Subcommands
#

def cmd_simulate(args, settings: Settings) -> int:
    detector = settings.detector()
    truth = settings.truth()
    clean = synthesize(truth, detector, settings["simulate.subsamples"])
    write_spectrum(clean, args.output)
    print("clean = {}".format(args.output))

    if args.noisy:
        snr = args.snr if args.snr is not None else settings["noise.snr"]
        sigma = settings["noise.sigma"]
        if sigma is None:
            if snr is None:
                raise UsageError("a noisy copy needs noise.snr or noise.sigma")
            sigma = sigma_for_snr(snr, truth, detector, settings["noise.convention"])
        spec = NoiseSpec(sigma, settings["noise.seed"], settings["noise.convention"])
        write_spectrum(add_noise(clean, spec), args.noisy)
        print("noisy = {}".format(args.noisy))
        print("sigma = {:.10g}".format(sigma))
        print("seed = {}".format(spec.seed))
    return 0


def _noise_sigma(args, settings, spectrum) -> float:
    if args.sigma is not None:
        return args.sigma
    if settings["noise.sigma"] is not None:
        return settings["noise.sigma"]
    sigma = wavelet.estimate_noise_level(wavelet.dwt(spectrum, settings.wavelet_config()))
    logger.info("noise level estimated from the finest wavelet band: {:.6g}".format(sigma))
    if not sigma > 0:
        raise DataError("cannot estimate the noise level of the input, give --sigma")
    return sigma


def _response_for(settings, spectrum):
    detector = settings.detector()
    if detector.response is None:
        return None
    if detector.num_pixels != len(spectrum):
        logger.warning("response is {} pixels wide, spectrum {}: identity used".format(
            detector.num_pixels, len(spectrum)))
        return None
    return detector.response


def _cli_prior(args, settings, spectrum):
    if not args.prior_ghz:
        return None
    fwhm = settings["mer.prior_fwhm_ghz"]*1e9
    peaks = []
    for center in _parse_floats(args.prior_ghz):
        index = int(np.argmin(np.abs(spectrum.frequencies_hz - center*1e9)))
        height = max(float(spectrum.intensities[index]), 0.0)
        peaks.append(LorentzianPeak(center*1e9, fwhm, height))
    total = float(spectrum.intensities[spectrum.active()].sum())
    return mer.prior_on_axis(peaks, spectrum.frequencies_hz,
                             settings["mer.prior_background_fraction"], total)


def cmd_denoise(args, settings: Settings) -> int:
    spectrum = _masked(read_spectrum(args.input), args.mask_ghz)
    diag_path = args.output + ".diag"

    if args.method == "wa":
        config = settings.wavelet_config()
        report = wavelet.denoise_report(spectrum, config)
        write_spectrum(report.spectrum, args.output)
        if args.coeffs:
            wavelet.write_coefficients(report.coefficients, args.coeffs)
        items = [("method", "wa"),
                 ("wavelet", config.wavelet_name),
                 ("levels", report.coefficients.levels),
                 ("threshold_rule", config.threshold_rule.value),
                 ("threshold_mode", config.threshold_mode.value),
                 ("noise_level", "{:.10g}".format(report.noise_level)),
                 ("thresholds", ",".join("{:.10g}".format(q) for q in report.thresholds)),
                 ("energy_in", "{:.10g}".format(spectrum.energy())),
                 ("energy_out", "{:.10g}".format(report.spectrum.energy()))]
        atomic_write_text(diag_path, _key_values(items))
        print(_key_values(items), end="")
        if args.plot:
            plot_spectra([("input", spectrum), ("wa", report.spectrum)], args.plot, "Wavelet denoising")
        return 0

    sigma = _noise_sigma(args, settings, spectrum)
    config = settings.mer_config(_cli_prior(args, settings, spectrum))
    if args.trace:
        config = replace(config, record_trace=True)
    result = mer.reconstruct(spectrum, _response_for(settings, spectrum), sigma, config)
    feasible = result.status is not mer.MerStatus.INFEASIBLE
    items = [("method", "mer"),
             ("feasibility", "feasible" if feasible else "infeasible"),
             ("status", result.status.value),
             ("iterations", result.iterations),
             ("termination_metric", "{:.10g}".format(result.final_termination_metric)),
             ("chi_sq", "{:.10g}".format(result.final_chi_sq)),
             ("entropy", "{:.10g}".format(result.final_entropy)),
             ("lambda", "{:.10g}".format(result.lambda_)),
             ("sigma", "{:.10g}".format(sigma)),
             ("entropy_form", config.entropy_form.value),
             ("stalled", "true" if result.stalled else "false")]
    atomic_write_text(diag_path, _key_values(items))
    print(_key_values(items), end="")
    if args.trace:
        mer.write_trace_csv(result, args.trace)

    if not feasible:
        raise DataError("data too noisy: the entropy maximum already fits within chi0^2, "
                        "no reconstruction written")
    write_spectrum(result.reconstruction, args.output)
    if args.plot:
        plot_spectra([("input", spectrum), ("mer", result.reconstruction)], args.plot,
                     "Maximum entropy reconstruction")
    if result.status is not mer.MerStatus.CONVERGED:
        raise ConvergenceError("reconstruction did not converge in {} iterations (metric {:.4g})".format(
            result.iterations, result.final_termination_metric))
    return 0


def cmd_fit(args, settings: Settings) -> int:
    spectrum = _masked(read_spectrum(args.input), args.mask_ghz)
    n_peaks = args.peaks if args.peaks is not None else settings["fit.n_peaks"]
    result = peakfit.fit_spectrum(spectrum, n_peaks, settings.fit_options())
    text = result.to_text()
    print(text, end="")
    if args.output:
        atomic_write_text(args.output, text)
    if args.csv:
        row = ",".join(peakfit.FIT_CSV_HEADER) + "\n" + ",".join(result.csv_row()) + "\n"
        atomic_write_text(args.csv, row)
    if not result.converged:
        raise ConvergenceError("Lorentzian fit did not converge in {} iterations".format(result.iterations))
    return 0


def cmd_crlb(args, settings: Settings) -> int:
    detector = settings.detector()
    truth = settings.truth()
    grid = _parse_floats(args.snr_grid) if args.snr_grid else list(settings["bench.snr_grid"])
    convention = SnrConvention.PER_PIXEL if args.per_pixel else settings["noise.convention"]
    # The bound takes the per-pixel SNR; peak SNRs go through the noise level they imply
    per_pixel = [crlb.inputs_for_truth(truth, detector, sigma_for_snr(snr, truth, detector, convention)).snr_per_pixel
                 for snr in grid]
    logger.debug("{} SNR {} -> per-pixel SNR {}".format(
        SnrConvention(convention).value, grid, ", ".join("{:.4g}".format(snr) for snr in per_pixel)))
    inputs = crlb.CrlbInputs(detector, truth.brillouin_fwhm_hz, truth.relative_intensity, per_pixel[0])
    curve = crlb.crlb_curve(inputs, per_pixel)
    crlb.write_curve(grid, curve, args.output)
    print("alpha_m_per_hz = {:.10g}".format(detector.dispersion_scale))
    print("snr_convention = {}".format(SnrConvention(convention).value))
    print(crlb.curve_to_csv(grid, curve), end="")
    return 0


def cmd_bench(args, settings: Settings) -> int:
    if args.realizations is not None:
        settings.set("bench.realizations", str(args.realizations), "--realizations")
    if args.workers is not None:
        settings.set("bench.workers", str(args.workers), "--workers")
    if args.methods:
        settings.set("bench.methods", args.methods, "--methods")
    config = settings.bench_config()
    os.makedirs(args.output_dir, exist_ok=True)

    def progress(done, total):
        if done % 100 == 0 or done == total:
            logger.info("{}/{} realizations".format(done, total))

    report = bench.run_bench(config, progress)
    report.write(args.output_dir)
    atomic_write_text(os.path.join(args.output_dir, "config.txt"), settings.dump())
    if report.rows and not report.incomplete:
        bench.render_plots(report, args.output_dir)
    print(report.to_csv(), end="")
    if report.incomplete:
        raise ConvergenceError("bench interrupted, partial report written to '{}'".format(args.output_dir))
    return 0


def cmd_sound(args, settings: Settings) -> int:
    wavelength = args.wavelength_nm*1e-9
    angle = math.radians(args.angle_deg)
    if args.speed_m_s is not None:
        shift = peakfit.shift_for_speed(args.speed_m_s, wavelength, args.index, angle)
        print("shift_ghz = {:.6f}".format(shift*1e-9))
    else:
        speed = peakfit.speed_of_sound(args.shift_ghz*1e9, wavelength, args.index, angle)
        print("speed_m_s = {:.3f}".format(speed))
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "denoise": cmd_denoise,
    "fit": cmd_fit,
    "crlb": cmd_crlb,
    "bench": cmd_bench,
    "sound": cmd_sound,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="configuration override, applied after the file (repeatable)")
    common.add_argument("--seed", type=int, help="base seed (same as --set noise.seed=N)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    common.add_argument("--log-file", help="write a debug log to this file")

    parser = _Parser(prog="brillo", description="Brillouin spectrum reconstruction toolkit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("simulate", parents=[common], help="synthesize ground truth spectra")
    p.add_argument("-o", "--output", required=True, help="clean spectrum CSV")
    p.add_argument("--noisy", help="also write a noisy copy to this CSV")
    p.add_argument("--snr", type=float, help="SNR of the noisy copy (noise.snr)")

    p = sub.add_parser("denoise", parents=[common], help="reconstruct a spectrum")
    p.add_argument("input", help="spectrum CSV")
    p.add_argument("-o", "--output", required=True, help="reconstructed spectrum CSV")
    p.add_argument("--method", choices=["mer", "wa"], default="mer")
    p.add_argument("--sigma", type=float, help="noise deviation; estimated from the data if omitted")
    p.add_argument("--mask-ghz", action="append", metavar="LO:HI", help="exclude a band (repeatable)")
    p.add_argument("--prior-ghz", metavar="C1,C2,...", help="approximate peak centers for the MER prior")
    p.add_argument("--trace", help="MER iteration trace CSV")
    p.add_argument("--coeffs", help="wavelet coefficients CSV")
    p.add_argument("--plot", help="SVG with input and output spectra")

    p = sub.add_parser("fit", parents=[common], help="fit Lorentzians to a spectrum")
    p.add_argument("input", help="spectrum CSV")
    p.add_argument("-o", "--output", help="key = value result file")
    p.add_argument("--csv", help="result as a one-row CSV")
    p.add_argument("--peaks", type=int, help="number of Lorentzians (fit.n_peaks)")
    p.add_argument("--mask-ghz", action="append", metavar="LO:HI", help="exclude a band (repeatable)")

    p = sub.add_parser("crlb", parents=[common], help="precision bound against SNR")
    p.add_argument("-o", "--output", required=True, help="bound curve CSV")
    p.add_argument("--snr-grid", help="comma separated SNR values in the noise.convention convention (bench.snr_grid)")
    p.add_argument("--per-pixel", action="store_true", help="read the grid as per-pixel-average SNR values")

    p = sub.add_parser("bench", parents=[common], help="Monte Carlo comparison of the estimators")
    p.add_argument("-o", "--output-dir", required=True, help="report directory")
    p.add_argument("--realizations", type=int, help="realizations per SNR (bench.realizations)")
    p.add_argument("--workers", type=int, help="worker processes (bench.workers)")
    p.add_argument("--methods", help="comma separated subset of none,wa,mer (bench.methods)")

    p = sub.add_parser("sound", parents=[common], help="speed of sound from a Brillouin shift")
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--shift-ghz", type=float, help="Brillouin shift")
    what.add_argument("--speed-m-s", type=float, help="speed of sound, prints the expected shift")
    p.add_argument("--wavelength-nm", type=float, required=True, help="laser wavelength")
    p.add_argument("--index", type=float, required=True, help="refractive index")
    p.add_argument("--angle-deg", type=float, default=180.0, help="scattering angle, 180 = backscattering")
    return parser


def load_settings(args) -> Settings:
    settings = Settings.load(args.config, args.overrides)
    if args.seed is not None:
        settings.set("noise.seed", str(args.seed), "--seed")
    return settings


def main(argv=None) -> int:
    """Run one subcommand, return the exit status"""
    try:
        args = build_parser().parse_args(argv)
        trace.configure(args.verbose, args.log_file)
        return COMMANDS[args.command](args, load_settings(args))
    except BrilloError as err:
        print("ERROR {}: {}".format(err.exit_code, err), file=sys.stderr)
        return err.exit_code
    except OSError as err:
        print("ERROR {}: {}".format(DataError.exit_code, err), file=sys.stderr)
        return DataError.exit_code
