# File: test_wavelet.py
# Date: 17-10-2026
#
import math
import time

import numpy as np
import pytest

from brillo import peakfit, wavelet
from brillo.errors import DataError
from brillo.noise import NoiseSpec, add_noise
from brillo.spectrum import Spectrum
from brillo.wavelet import (Boundary, ThresholdMode, ThresholdRule, WaveletCoefficients, WaveletConfig,
                            WaveletFamily)


def noise_spectrum(size, sigma, seed):
    flat = Spectrum(np.arange(size)*1e9, np.zeros(size))
    return add_noise(flat, NoiseSpec(sigma, seed=seed))


def test_default_levels():
    assert wavelet.default_levels(120) == 2
    assert wavelet.default_levels(1024) == 6
    assert wavelet.default_levels(8) == 1


def test_wavelet_names():
    assert WaveletConfig().wavelet_name == "db4"
    assert WaveletConfig(family="symlet", order=4).wavelet_name == "sym4"
    assert WaveletConfig(order=1).wavelet_name == "db1"
    with pytest.raises(DataError):
        WaveletConfig(family=WaveletFamily.SYMLET, order=1)
    with pytest.raises(DataError):
        WaveletConfig(threshold_rule="sure")


@pytest.mark.parametrize("size", [64, 120, 128])
@pytest.mark.parametrize("family, order", [("daubechies", 1), ("daubechies", 4), ("daubechies", 8),
                                           ("symlet", 4), ("symlet", 8)])
@pytest.mark.parametrize("boundary", list(Boundary))
def test_perfect_reconstruction(size, family, order, boundary):
    config = WaveletConfig(family=family, order=order, boundary=boundary)
    rng = np.random.default_rng(size + order)
    for _ in range(4):
        signal = rng.normal(size=size)*100.0
        coeffs = wavelet.dwt(signal, config)
        assert len(coeffs.detail) == wavelet.default_levels(size)
        np.testing.assert_allclose(wavelet.idwt(coeffs), signal, rtol=0, atol=1e-9)


def test_signal_shorter_than_the_filter():
    with pytest.raises(DataError):
        wavelet.dwt(np.ones(10), WaveletConfig(order=8))
    with pytest.raises(DataError):
        wavelet.dwt(np.ones(64), WaveletConfig(order=1, levels=7))


def test_universal_thresholds():
    donoho = wavelet.threshold_value(2.0, 120)
    literal = wavelet.threshold_value(2.0, 120, ThresholdRule.PAPER_UNIVERSAL)
    assert donoho == pytest.approx(2.0*math.sqrt(2*math.log(120)))
    assert literal == pytest.approx(2.0*math.sqrt(2*math.log(120)/120))
    assert donoho/literal == pytest.approx(math.sqrt(120))
    with pytest.raises(DataError):
        wavelet.threshold_value(-1.0, 120)


def test_soft_and_hard_shrinkage():
    coeffs = WaveletCoefficients(np.array([5.0, -7.0]), [np.array([-3.0, -0.5, 0.5, 2.0])], 4)
    soft = wavelet.shrink(coeffs, [1.0], ThresholdMode.SOFT)
    hard = wavelet.shrink(coeffs, [1.0], ThresholdMode.HARD)
    np.testing.assert_allclose(soft.detail[0], [-2.0, 0.0, 0.0, 1.0])
    np.testing.assert_allclose(hard.detail[0], [-3.0, 0.0, 0.0, 2.0])
    np.testing.assert_array_equal(soft.approximation, [5.0, -7.0])
    with pytest.raises(DataError):
        wavelet.shrink(coeffs, [-1.0])


def test_zero_threshold_is_the_identity(clean):
    config = WaveletConfig(threshold_scale=0.0)
    out = wavelet.denoise(clean, config)
    np.testing.assert_allclose(out.intensities, clean.intensities, atol=1e-8)


def test_noise_level_estimate():
    noisy = noise_spectrum(8192, 2.0, seed=17)
    coeffs = wavelet.dwt(noisy, WaveletConfig())
    assert wavelet.estimate_noise_level(coeffs) == pytest.approx(2.0, rel=0.1)


@pytest.mark.parametrize("mode", list(ThresholdMode))
def test_pure_noise_is_removed(mode):
    noisy = noise_spectrum(1024, 5.0, seed=8)
    out = wavelet.denoise(noisy, WaveletConfig(threshold_mode=mode))
    assert out.energy() < 0.1*noisy.energy()


def test_denoising_gets_closer_to_the_clean_spectrum(clean):
    noisy = add_noise(clean, NoiseSpec(200.0, seed=4))
    out = wavelet.denoise(noisy)
    before = np.sqrt(np.mean((noisy.intensities - clean.intensities)**2))
    after = np.sqrt(np.mean((out.intensities - clean.intensities)**2))
    assert after < before
    assert out.mask is None and len(out) == len(clean)


def test_level_dependent_thresholds(clean):
    noisy = add_noise(clean, NoiseSpec(100.0, seed=2))
    config = WaveletConfig(threshold_rule=ThresholdRule.LEVEL_DEPENDENT)
    report = wavelet.denoise_report(noisy, config)
    assert len(report.thresholds) == report.coefficients.levels == 2
    assert len(set(report.thresholds)) > 1


def test_fixed_noise_level_and_scale(clean):
    config = WaveletConfig(noise_level=10.0, threshold_scale=0.5)
    report = wavelet.denoise_report(clean, config)
    assert report.noise_level == 10.0
    expected = 0.5*10.0*math.sqrt(2*math.log(120))
    assert report.thresholds == [pytest.approx(expected)]*2


def test_coefficients_csv(clean):
    coeffs = wavelet.dwt(clean)
    lines = wavelet.coefficients_to_csv(coeffs).splitlines()
    assert lines[0] == "level,index,value"
    assert len(lines) == coeffs.count() + 1
    assert lines[1].startswith("0,0,")
    assert lines[-1].startswith("2,")


@pytest.mark.slow
def test_denoising_time(clean):
    noisy = add_noise(clean, NoiseSpec(200.0, seed=6))
    wavelet.denoise(noisy)
    start = time.perf_counter()
    wavelet.denoise(noisy)
    assert time.perf_counter() - start <= 0.01


def test_haar_by_hand():
    coeffs = wavelet.dwt(np.array([1.0, 3.0, 5.0, 7.0]), WaveletConfig(order=1, levels=1))
    np.testing.assert_allclose(coeffs.approximation, np.array([4.0, 12.0])/math.sqrt(2))
    np.testing.assert_allclose(coeffs.detail[0], np.array([-2.0, -2.0])/math.sqrt(2))


def test_constant_signal_has_no_detail():
    coeffs = wavelet.dwt(np.full(128, 3.0), WaveletConfig(order=4, levels=3, boundary=Boundary.PERIODIC))
    for band in coeffs.detail:
        np.testing.assert_allclose(band, 0.0, atol=1e-10)
    # Orthogonal transform with periodic boundaries
    assert coeffs.energy() == pytest.approx(128*9.0, rel=1e-10)
    assert wavelet.estimate_noise_level(wavelet.dwt(np.zeros(128))) == 0.0


def test_noiseless_spectrum_survives(clean):
    out = wavelet.denoise(clean)
    assert np.sqrt(np.mean((out.intensities - clean.intensities)**2)) < 10.0


def test_shrinkage_never_expands():
    rng = np.random.default_rng(1)
    coeffs = wavelet.dwt(rng.normal(size=120)*10.0)
    for mode in ThresholdMode:
        small = wavelet.shrink(coeffs, 1.0, mode)
        large = wavelet.shrink(coeffs, 5.0, mode)
        for band, s, l in zip(coeffs.detail, small.detail, large.detail):
            assert np.all(np.abs(s) <= np.abs(band))
            assert np.all(np.abs(l) <= np.abs(s))


def test_read_only_input(clean):
    assert not clean.intensities.flags.writeable
    coeffs = wavelet.dwt(clean)
    np.testing.assert_allclose(wavelet.idwt(coeffs), clean.intensities, rtol=0, atol=1e-8)
    frozen = np.linspace(0.0, 1.0, 64)
    frozen.setflags(write=False)
    assert wavelet.dwt(frozen).length == 64
    assert not frozen.flags.writeable


def test_denoised_lines_can_still_be_fitted(clean, truth, detector):
    noisy = add_noise(clean, NoiseSpec(100.0, seed=9))
    result = peakfit.fit_spectrum(wavelet.denoise(noisy), 3)
    assert result.converged
    assert result.shift_hz == pytest.approx(truth.brillouin_shift_hz, abs=0.3e9)
    assert 0.8e9 < result.fwhm_hz < 4e9
