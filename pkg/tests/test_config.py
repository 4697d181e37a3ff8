# File: test_config.py
# Date: 17-10-2026
#
import pytest

from brillo.bench import BenchConfig, Method
from brillo.config import KEYS, Settings
from brillo.errors import UsageError
from brillo.mer import EntropyForm, MerConfig
from brillo.wavelet import ThresholdRule, WaveletConfig


def test_defaults():
    settings = Settings()
    assert settings["detector.num_pixels"] == 120
    assert settings["mer.lambda"] is None
    assert settings["noise.snr"] is None
    assert settings["bench.prior_snrs"] is None
    assert settings["bench.lambda_scale_table"] == {1.0: 0.25, 2.0: 0.5}
    assert settings["bench.fit_with_hints"] is False
    assert settings["wavelet.threshold_rule"] is ThresholdRule.DONOHO_UNIVERSAL
    assert all(source == "default" for source in settings.sources.values())
    with pytest.raises(UsageError):
        settings["mer.lambada"]


def test_read_text():
    settings = Settings()
    settings.read_text("""
# a comment line
truth.shift_ghz = 7.5   # trailing comment
bench.methods = none, mer
bench.lambda_scale_table = 1:4.5, 2:3
bench.prior_snrs = 1,2
mer.entropy_form = paper-shannon
fit.saturation_count = 65535
""", "test.cfg")
    assert settings["truth.shift_ghz"] == 7.5
    assert settings["bench.methods"] == (Method.NONE, Method.MER)
    assert settings["bench.lambda_scale_table"] == {1.0: 4.5, 2.0: 3.0}
    assert settings["bench.prior_snrs"] == (1.0, 2.0)
    assert settings["mer.entropy_form"] is EntropyForm.SHANNON
    assert settings["fit.saturation_count"] == 65535.0
    assert settings.sources["truth.shift_ghz"] == "test.cfg line 3"


@pytest.mark.parametrize("text", ["mer.lambada = 3", "mer.max_iterations = many",
                                  "bench.regenerate_infeasible = perhaps", "noise.seed",
                                  "mer.chi0_sq = nan", "bench.lambda_scale_table = 1=3"])
def test_bad_lines(text):
    with pytest.raises(UsageError):
        Settings().read_text(text)


def test_dump_reads_back():
    settings = Settings.load(overrides=["truth.shift_ghz=7.081", "bench.methods=wa",
                                        "bench.lambda_scale_table=1:4.0", "wavelet.levels=3",
                                        "mer.lambda=250.5"])
    again = Settings()
    again.read_text(settings.dump())
    assert again.values == settings.values
    assert len(settings.dump().splitlines()) > len(KEYS)


def test_overrides_win_over_the_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("noise.seed = 5\nmer.lambda_scale = 3.0\n", encoding="utf-8")
    settings = Settings.load(str(path), ["noise.seed=9"])
    assert settings["noise.seed"] == 9
    assert settings["mer.lambda_scale"] == 3.0
    assert settings.sources["noise.seed"] == "override"
    with pytest.raises(UsageError):
        Settings.load(str(tmp_path / "missing.cfg"))
    with pytest.raises(UsageError):
        Settings.load(overrides=["noise.seed"])


def test_domain_objects():
    settings = Settings.load(overrides=["detector.response_box_pixels=3",
                                        "detector.response_fwhm_ghz=0.5", "truth.background=20"])
    detector = settings.detector()
    assert detector.response is not None
    assert detector.response_fwhm_hz == pytest.approx(0.5e9)
    assert detector.dispersion_scale == pytest.approx(1.3e-14)
    truth = settings.truth()
    assert truth.brillouin_shift_hz == pytest.approx(10e9)
    assert truth.background == 20.0
    assert truth.relative_intensity == pytest.approx(0.1)
    assert settings.wavelet_config().wavelet_name == "db4"
    assert settings.fit_options().max_iter == 200
    assert settings.mer_config().lambda_ is None


def test_bench_config():
    settings = Settings.load(overrides=["bench.realizations=60", "bench.snr_grid=2,4",
                                        "bench.methods=none", "noise.seed=11",
                                        "bench.lambda_scale_table=2:5", "bench.prior_offset_ghz=0.25"])
    config = settings.bench_config()
    assert config.realizations == 60
    assert config.snr_grid == (2.0, 4.0)
    assert config.methods == (Method.NONE,)
    assert config.base_seed == 11
    assert config.mer_config_for(2).lambda_scale == 5.0
    assert config.prior_offset_hz == pytest.approx(0.25e9)


@pytest.mark.parametrize("override", ["bench.realizations=10", "truth.brillouin_fwhm_ghz=0",
                                      "detector.num_pixels=2", "wavelet.order=0",
                                      "mer.max_iterations=0", "fit.saturation_fraction=2"])
def test_bad_domain_values(override):
    settings = Settings.load(overrides=[override])
    with pytest.raises(UsageError):
        settings.bench_config()


def test_file_defaults_match_the_code_defaults():
    config = Settings().bench_config()
    reference = BenchConfig()
    for name in ("lambda_scale_table", "prior_background_fraction", "fit_with_hints", "snr_grid",
                 "realizations", "max_regenerations"):
        assert getattr(config, name) == getattr(reference, name)
    assert config.wavelet_config == WaveletConfig()
    assert config.mer_config.lambda_scale == MerConfig().lambda_scale
