# File: test_spectrum.py
# Date: 16-10-2026
#
import numpy as np
import pytest

from brillo.detector import DetectorModel, box_response
from brillo.errors import DataError
from brillo.lineshape import GroundTruth, LorentzianPeak, lorentzian_sum
from brillo.spectrum import Spectrum, apply_response, synthesize
from brillo.spectrum_io import parse_spectrum, read_spectrum, spectrum_to_csv, write_spectrum


def test_detector_geometry(detector):
    assert detector.dispersion_scale == pytest.approx(1.3e-14, rel=1e-12)
    assert detector.step_hz == 0.5e9
    axis = detector.frequency_axis()
    assert axis.size == 120
    assert axis[detector.center_index] == 0.0
    assert axis[0] == -30e9
    assert axis[-1] == 29.5e9


def test_detector_needs_four_pixels():
    with pytest.raises(DataError):
        DetectorModel(num_pixels=3)


def test_identity_response_is_dropped():
    detector = DetectorModel(num_pixels=8, bandwidth_hz=8e9, response=np.eye(8), response_fwhm_hz=1e9)
    assert detector.response is None
    assert detector.response_fwhm_hz == 0.0


def test_synthesize_samples_the_peaks(truth, detector, clean):
    assert len(clean) == 120
    np.testing.assert_allclose(clean.intensities, lorentzian_sum(truth.peaks, detector.frequency_axis()))
    assert clean.intensities[60] == pytest.approx(1e4, rel=1e-3)
    # Plus about 25 counts of Rayleigh tail
    assert clean.intensities[80] == pytest.approx(1e3, rel=0.05)
    assert clean.mask is None


def test_subsampling_averages_inside_the_pixel(truth, detector, clean):
    averaged = synthesize(truth, detector, subsamples=5)
    # The profile is maximal at the pixel center
    assert averaged.intensities[60] < clean.intensities[60]
    with pytest.raises(DataError):
        synthesize(truth, detector, subsamples=0)


def test_empty_and_single_peak_lists(detector):
    empty = synthesize([], detector)
    assert len(empty) == 120
    np.testing.assert_array_equal(empty.intensities, 0.0)
    np.testing.assert_array_equal(synthesize([], detector, subsamples=4, background=7.0).intensities, 7.0)
    single = synthesize([LorentzianPeak(2.5e9, 1e9, 300.0)], detector)
    assert int(np.argmax(single.intensities)) == 65
    assert single.intensities[65] == pytest.approx(300.0)
    assert single.intensities[64] == pytest.approx(150.0)


@pytest.mark.parametrize("subsamples", [1, 8])
@pytest.mark.parametrize("box", [None, 3])
def test_synthesis_is_linear_in_the_peaks(truth, detector, subsamples, box):
    if box is not None:
        detector = detector.with_response(box_response(120, box), 0.5e9)
    rayleigh, stokes, anti_stokes = truth.peaks
    extra = LorentzianPeak(-21.3e9, 2.2e9, 40.0)
    part_a = synthesize([rayleigh, extra], detector, subsamples)
    part_b = synthesize([stokes, anti_stokes], detector, subsamples)
    union = synthesize([rayleigh, extra, stokes, anti_stokes], detector, subsamples)
    np.testing.assert_allclose(part_a.intensities + part_b.intensities, union.intensities, rtol=1e-12)


def test_symmetric_truth_gives_a_mirror_symmetric_spectrum(clean, detector, truth):
    center = detector.center_index
    values = clean.intensities
    np.testing.assert_allclose(values[center + 1:], values[center - 1:0:-1], rtol=1e-12)
    averaged = synthesize(truth, detector, subsamples=8).intensities
    np.testing.assert_allclose(averaged[center + 1:], averaged[center - 1:0:-1], rtol=1e-12)


def test_peak_outside_axis(detector):
    with pytest.raises(DataError):
        synthesize(GroundTruth.symmetric(40e9, 1e9, 1e3, 1e4), detector)


def test_response_is_a_matrix_product(truth, detector, clean):
    response = box_response(120, 3)
    blurred = synthesize(truth, detector.with_response(response, 0.5e9))
    np.testing.assert_allclose(blurred.intensities, response @ clean.intensities)
    assert blurred.intensities[60] == pytest.approx(clean.intensities[59:62].mean())
    with pytest.raises(DataError):
        apply_response(detector, Spectrum(np.arange(10.0), np.zeros(10)))


def test_box_response_rows():
    response = box_response(10, 3)
    np.testing.assert_allclose(response[1:-1].sum(axis=1), 1.0)
    with pytest.raises(DataError):
        box_response(10, 4)


@pytest.mark.parametrize("freqs", [[0.0, 1.0, 1.0, 2.0], [0.0, 1.0, 3.0, 4.0], [2.0, 1.0, 0.0, -1.0]])
def test_bad_axis(freqs):
    with pytest.raises(DataError):
        Spectrum(freqs, np.zeros(4))


def test_length_mismatch():
    with pytest.raises(DataError):
        Spectrum([0.0, 1.0, 2.0], [1.0, 2.0])


def test_mask_band(clean):
    masked = clean.mask_band(-1e9, 1e9)
    assert masked.mask.sum() == 5
    assert masked.active().sum() == 115
    assert clean.mask is None
    # An empty mask is the same as no mask
    assert clean.with_mask(np.zeros(120, dtype=bool)).mask is None


def test_spectra_are_immutable(clean):
    with pytest.raises(ValueError):
        clean.intensities[0] = 1.0


def test_mirrored(clean):
    mirror = clean.mirrored()
    np.testing.assert_allclose(mirror.frequencies_hz, -clean.frequencies_hz[::-1])
    np.testing.assert_allclose(mirror.intensities, clean.intensities[::-1])


def test_csv_is_stable(tmp_path, clean):
    path = str(tmp_path / "clean.csv")
    write_spectrum(clean.mask_band(-1e9, 1e9), path)
    loaded = read_spectrum(path)
    np.testing.assert_array_equal(loaded.intensities, clean.intensities)
    np.testing.assert_allclose(loaded.frequencies_hz, clean.frequencies_hz, rtol=1e-12)
    assert loaded.mask.sum() == 5
    # parse -> serialize gives the same bytes
    with open(path, encoding="utf-8") as csvfile:
        text = csvfile.read()
    assert spectrum_to_csv(parse_spectrum(text)) == text


def test_csv_header_without_mask(clean):
    assert spectrum_to_csv(clean).splitlines()[0] == "frequency_ghz,intensity"


def test_csv_errors(tmp_path):
    with pytest.raises(DataError, match="header"):
        parse_spectrum("f,i\n0,1\n1,2\n")
    with pytest.raises(DataError, match="line 3"):
        parse_spectrum("frequency_ghz,intensity\n0,1\n1,x\n")
    with pytest.raises(DataError, match="mask"):
        parse_spectrum("frequency_ghz,intensity,mask\n0,1,0\n1,2,maybe\n")
    with pytest.raises(DataError):
        read_spectrum(str(tmp_path / "missing.csv"))
