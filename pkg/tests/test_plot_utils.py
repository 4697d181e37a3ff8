# File: test_plot_utils.py
# Date: 19-10-2026
#
from brillo.plot_utils import new_figure, plot_series, plot_spectra, save_svg


def test_same_figure_same_bytes(tmp_path):
    paths = [tmp_path / "a.svg", tmp_path / "b.svg"]
    for path in paths:
        fig, ax = new_figure("bias", "SNR", "bias (%)")
        plot_series(ax, [1, 2, 3], {"none": [3.0, 2.0, 1.0], "mer": [1.0, 0.5, 0.2]})
        save_svg(fig, str(path))
    first, second = (path.read_bytes() for path in paths)
    assert first == second
    assert b"<dc:date>" not in first


def test_spectra_plot(tmp_path, clean):
    path = tmp_path / "spectra.svg"
    masked = clean.mask_band(-1.5e9, 1.5e9)
    plot_spectra([("clean", clean), ("masked", masked)], str(path), "reference")
    text = path.read_text()
    assert text.lstrip().startswith("<?xml")
    assert "<dc:date>" not in text
