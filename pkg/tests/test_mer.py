# File: test_mer.py
# Date: 17-10-2026
#
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq, minimize

from brillo import mer, peakfit
from brillo.detector import box_response
from brillo.errors import DataError
from brillo.lineshape import LorentzianPeak
from brillo.mer import EntropyForm, MerConfig, MerSolver, MerStatus
from brillo.noise import NoiseSpec, SnrConvention, add_noise, sigma_for_snr
from brillo.spectrum import Spectrum


def small_spectrum(values):
    values = np.asarray(values, dtype=float)
    return Spectrum(np.arange(values.size)*1e9, values)


def random_instance(seed, size=8):
    rng = np.random.default_rng(seed)
    return small_spectrum(rng.uniform(1.0, 50.0, size)), float(rng.uniform(0.2, 2.0))


#
# Entropy and data term
#

def test_skilling_entropy_vanishes_on_the_model():
    config = MerConfig()
    model = np.array([1.0, 2.0, 3.0, 4.0])
    assert mer.entropy(model, config, model) == pytest.approx(0.0)
    np.testing.assert_allclose(mer.entropy_gradient(model, config, model), 0.0, atol=1e-15)
    assert mer.entropy(model*1.5, config, model) < 0


def test_shannon_entropy_of_a_flat_distribution():
    config = MerConfig(entropy_form=EntropyForm.SHANNON)
    assert mer.entropy(np.full(16, 3.0), config) == pytest.approx(math.log(16))
    np.testing.assert_allclose(mer.entropy_gradient(np.full(16, 3.0), config), 0.0, atol=1e-15)


def test_values_below_the_floor_rejected():
    with pytest.raises(DataError):
        mer.entropy(np.array([1.0, 0.0, 2.0]), MerConfig())
    with pytest.raises(DataError):
        mer.entropy_gradient(np.array([1.0, -1.0, 2.0]), MerConfig())


@pytest.mark.parametrize("form", list(EntropyForm))
def test_entropy_gradient_matches_central_differences(form):
    rng = np.random.default_rng(11)
    config = MerConfig(entropy_form=form)
    for _ in range(50):
        f = rng.uniform(1.0, 10.0, 8)
        model = rng.uniform(1.0, 10.0, 8)
        grad = mer.entropy_gradient(f, config, model)
        numeric = np.empty(8)
        for j in range(8):
            h = 1e-6*f[j]
            up, down = f.copy(), f.copy()
            up[j] += h
            down[j] -= h
            numeric[j] = (mer.entropy(up, config, model) - mer.entropy(down, config, model))/(2*h)
        np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-7)


def test_chi_square_of_the_data_and_of_one_sigma_off():
    data = small_spectrum([3.0, 5.0, 7.0, 9.0])
    assert mer.chi_square(data.intensities, data, None, 2.0) == pytest.approx(0.0)
    assert mer.chi_square(data.intensities + 2.0, data, None, 2.0) == pytest.approx(1.0)
    sigma = np.array([1.0, 2.0, 4.0, 8.0])
    assert mer.chi_square(data.intensities + sigma, data, None, sigma) == pytest.approx(1.0)


def test_chi_square_skips_masked_pixels():
    data = small_spectrum([3.0, 5.0, 1e6, 9.0]).with_mask([False, False, True, False])
    f = np.array([4.0, 6.0, 1.0, 10.0])
    # Three active pixels, each one sigma off
    assert mer.chi_square(f, data, None, 1.0) == pytest.approx(1.0)


def test_every_pixel_masked():
    data = small_spectrum([1.0, 2.0, 3.0, 4.0]).with_mask(np.ones(4, dtype=bool))
    with pytest.raises(DataError):
        mer.chi_square(np.ones(4), data, None, 1.0)


def test_chi_square_gradient_matches_central_differences():
    rng = np.random.default_rng(5)
    response = box_response(8, 3)
    config = MerConfig()
    for _ in range(50):
        data = small_spectrum(rng.uniform(1.0, 50.0, 8))
        sigma = rng.uniform(0.5, 3.0, 8)
        f = rng.uniform(1.0, 50.0, 8)
        _, grad = mer.gradients(f, data, response, sigma, config)
        numeric = np.empty(8)
        for j in range(8):
            h = 1e-6*f[j]
            up, down = f.copy(), f.copy()
            up[j] += h
            down[j] -= h
            numeric[j] = (mer.chi_square(up, data, response, sigma) -
                          mer.chi_square(down, data, response, sigma))/(2*h)
        np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-4)


def test_response_shape_checked():
    data = small_spectrum([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(DataError):
        mer.chi_square(np.ones(4), data, np.eye(3), 1.0)


def test_termination_metric_bounds():
    v = np.array([1.0, 2.0, -1.0])
    assert mer.termination_metric(v, 3.0*v) == pytest.approx(0.0)
    assert mer.termination_metric(v, -v) == pytest.approx(2.0)
    assert mer.termination_metric(v, np.zeros(3)) == 1.0
    orthogonal = np.array([2.0, -1.0, 0.0])
    assert mer.termination_metric(v, orthogonal) == pytest.approx(1.0)


def test_config_validation():
    with pytest.raises(DataError):
        MerConfig(wolfe_c1=0.5, wolfe_c2=0.5)
    with pytest.raises(DataError):
        MerConfig(lambda_=-1.0)
    with pytest.raises(DataError):
        MerConfig(prior_model=np.array([1.0, 0.0, 2.0]))
    with pytest.raises(ValueError):
        MerConfig(entropy_form="renyi")


#
# Solver
#

@pytest.mark.parametrize("seed", range(10))
def test_identity_response_matches_the_pixelwise_optimum(seed):
    # With R = I the stationarity condition decouples:
    # -log(f_i/m) = lambda 2/N (f_i - d_i)
    data, lam = random_instance(seed)
    config = MerConfig(lambda_=lam, termination_threshold=1e-8, max_iterations=20000)
    result = mer.reconstruct(data, None, 1.0, config)
    assert result.status is MerStatus.CONVERGED

    m = data.intensities.mean()
    expected = [brentq(lambda f: -math.log(f/m) - lam*2.0/8*(f - d), 1e-9, 1e4)
                for d in data.intensities]
    np.testing.assert_allclose(result.reconstruction.intensities, expected, rtol=1e-2, atol=1e-2)
    assert result.gradient_balance == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("seed", range(10))
def test_blurred_instance_matches_a_generic_optimizer(seed):
    data, lam = random_instance(100 + seed)
    response = box_response(8, 3)
    config = MerConfig(lambda_=lam, termination_threshold=1e-10, max_iterations=20000)
    result = mer.reconstruct(data, response, 1.0, config)
    assert result.status is not MerStatus.INFEASIBLE

    m = np.full(8, data.intensities.mean())

    def negative_q(f):
        s = np.sum(f - m - f*np.log(f/m))
        residual = response @ f - data.intensities
        chi = residual @ residual/8
        grad = -np.log(f/m) - lam*2.0/8*(response.T @ residual)
        return -(s - lam*(chi - 1.0)), -grad

    oracle = minimize(negative_q, m, jac=True, method="L-BFGS-B", bounds=[(1e-12, None)]*8,
                      options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 20000})
    np.testing.assert_allclose(result.reconstruction.intensities, oracle.x, rtol=1e-2, atol=1e-2)


def test_lagrangian_increases_along_the_trace():
    data, lam = random_instance(3)
    config = MerConfig(lambda_=lam, record_trace=True)
    result = mer.reconstruct(data, box_response(8, 3), 1.0, config)
    assert len(result.trace) == result.iterations > 0
    q = np.array([row.q for row in result.trace])
    assert np.all(np.diff(q) >= 0)
    assert all(row.mu > 0 for row in result.trace)


def test_infeasible_data():
    flat = Spectrum(np.arange(32)*1e9, np.full(32, 100.0))
    noisy = add_noise(flat, NoiseSpec(1.0, seed=3))
    config = MerConfig()
    assert not mer.feasibility_check(noisy, None, 5.0, config)
    result = mer.reconstruct(noisy, None, 5.0, config)
    assert result.status is MerStatus.INFEASIBLE
    assert result.iterations == 0
    assert result.final_chi_sq <= config.chi0_sq
    np.testing.assert_allclose(result.reconstruction.intensities, noisy.intensities.mean())


def test_iteration_limit():
    data, lam = random_instance(4)
    result = mer.reconstruct(data, None, 1.0, MerConfig(lambda_=lam, termination_threshold=1e-12,
                                                        max_iterations=1))
    assert result.status is MerStatus.MAX_ITERATIONS
    assert result.iterations == 1
    assert not result.stalled


def test_masked_pixels_follow_the_model():
    data, lam = random_instance(6)
    masked = data.with_mask([False, False, False, True, False, False, False, False])
    result = mer.reconstruct(masked, None, 1.0, MerConfig(lambda_=lam, termination_threshold=1e-8,
                                                          max_iterations=20000))
    m = masked.intensities[masked.active()].mean()
    # No data term on the masked pixel: its entropy gradient vanishes at f = m
    assert result.reconstruction.intensities[3] == pytest.approx(m, rel=1e-3)


def test_automatic_lambda():
    data, _ = random_instance(8)
    solver = MerSolver(data, None, 2.0, MerConfig(lambda_scale=3.0))
    assert solver.lam == pytest.approx(3.0*8*2.0)
    shannon = MerSolver(data, None, 2.0, MerConfig(lambda_scale=3.0, entropy_form=EntropyForm.SHANNON))
    assert shannon.lam == pytest.approx(3.0*8*2.0/data.intensities.sum())


def test_shannon_form_reduces_the_misfit():
    data, _ = random_instance(9)
    config = MerConfig(entropy_form=EntropyForm.SHANNON)
    solver = MerSolver(data, None, 1.0, config)
    start_chi = mer.chi_square(solver.start_point(), data, None, 1.0)
    result = solver.solve()
    assert result.iterations >= 1
    assert result.final_chi_sq < start_chi
    assert np.all(result.reconstruction.intensities >= config.positivity_floor)


def test_lambda_search_hits_the_constraint():
    data, _ = random_instance(12)
    config = MerConfig(lambda_search=True, termination_threshold=1e-6, max_iterations=20000)
    result = mer.reconstruct(data, None, 1.0, config)
    assert result.final_chi_sq == pytest.approx(1.0, rel=0.02)


#
# Prior
#

def test_build_prior(detector):
    peaks = [LorentzianPeak(0.0, 1e9, 1e4), LorentzianPeak(10e9, 1e9, 1e3)]
    model = mer.build_prior(peaks, detector, 0.1, total=5e4)
    assert model.size == 120
    assert model.sum() == pytest.approx(5e4)
    assert np.all(model > 0)
    assert int(np.argmax(model)) == detector.center_index
    flat = mer.build_prior([], detector)
    np.testing.assert_allclose(flat, flat[0])
    with pytest.raises(DataError):
        mer.build_prior([LorentzianPeak(40e9, 1e9, 1.0)], detector)
    with pytest.raises(DataError):
        mer.build_prior(peaks, detector, background_fraction=0.0)


def test_prior_is_the_start_point(detector, truth, clean):
    noisy = add_noise(clean, NoiseSpec(100.0, seed=1))
    model = mer.build_prior(truth.peaks, detector, 0.1, float(noisy.intensities.sum()))
    solver = MerSolver(noisy, None, 100.0, MerConfig(prior_model=model))
    np.testing.assert_allclose(solver.start_point(), model)
    with pytest.raises(DataError):
        MerSolver(noisy, None, 100.0, MerConfig(prior_model=model[:60]))


def test_reference_spectrum_reconstruction(truth, detector, clean):
    noisy = add_noise(clean, NoiseSpec(100.0, seed=21))
    model = mer.build_prior(truth.peaks, detector, 0.1, float(noisy.intensities.sum()))
    result = mer.reconstruct(noisy, None, 100.0, MerConfig(prior_model=model))
    assert result.status is not MerStatus.INFEASIBLE
    rec = result.reconstruction.intensities
    assert np.all(rec > 0)
    # The strongest line stays where it was
    assert int(np.argmax(rec)) == detector.center_index


def test_trace_csv(tmp_path):
    data, lam = random_instance(2)
    result = mer.reconstruct(data, None, 1.0, MerConfig(lambda_=lam, record_trace=True))
    path = tmp_path / "trace.csv"
    mer.write_trace_csv(result, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "iter,Q,S,chi_sq,termination_metric,mu"
    assert len(lines) == result.iterations + 1


@pytest.mark.slow
def test_reconstruction_time(truth, detector, clean):
    noisy = add_noise(clean, NoiseSpec(200.0, seed=5))
    model = mer.build_prior(truth.peaks, detector, 0.1, float(noisy.intensities.sum()))
    start = time.perf_counter()
    mer.reconstruct(noisy, None, 200.0, MerConfig(prior_model=model))
    assert time.perf_counter() - start <= 1.0


def test_shift_is_stable_over_two_decades_of_lambda(truth, detector, clean):
    sigma = sigma_for_snr(5.0, truth, detector, SnrConvention.PER_PIXEL)
    noisy = add_noise(clean, NoiseSpec(sigma, seed=17))
    model = mer.build_prior(truth.peaks, detector, 0.1, float(noisy.intensities.sum()))
    default = MerConfig().lambda_scale
    shifts = []
    for scale in (0.1*default, default, 10.0*default):
        config = MerConfig(lambda_scale=scale, prior_model=model)
        result = mer.reconstruct(noisy, detector.response, sigma, config)
        assert result.status is not MerStatus.INFEASIBLE
        fitted = peakfit.fit_spectrum(result.reconstruction, 3)
        assert fitted.converged
        shifts.append(fitted.shift_hz)
    assert (max(shifts) - min(shifts))/np.mean(shifts) < 0.005
