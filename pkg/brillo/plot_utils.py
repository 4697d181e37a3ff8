# File: plot_utils.py
# Date: 19-10-2026
#
"""
Plotting helpers.

Figures are built with the object oriented matplotlib API (no pyplot
state, no GUI backend) and saved as SVG through an atomic write.
"""

# General imports
import io

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .spectrum_io import atomic_write_text
from .trace import logger

# Cycle used for the method series
MARKERS = ("o", "s", "^", "D", "v")


def new_figure(title: str, xlabel: str, ylabel: str, size: tuple = (7, 5)):
    """Return a (figure, axes) pair with labels and a light grid"""
    fig = Figure(figsize=size)
    ax = fig.add_subplot(1, 1, 1)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.4)
    return fig, ax


def save_svg(fig: Figure, path: str):
    """Render the figure as SVG and write it atomically"""
    buffer = io.BytesIO()
    # Fixed id salt and no Date entry: equal figures give equal files
    with matplotlib.rc_context({"svg.hashsalt": "brillo"}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    atomic_write_text(path, buffer.getvalue().decode("utf-8"))
    logger.info("plot saved to '{}'".format(path))


def plot_series(ax, x, series: dict, linestyle: str = "-"):
    """One line with markers per entry of 'series' (label -> values)"""
    for i, (label, values) in enumerate(series.items()):
        ax.plot(x, values, linestyle=linestyle, marker=MARKERS[i % len(MARKERS)], label=label)
    if series:
        ax.legend()


def plot_spectra(spectra: list, path: str, title: str = "", offset: float = None):
    """
    Draw spectra one above the other.

    Parameters
    ----------
    spectra : list
        (label, Spectrum) pairs, drawn bottom to top
    path : str
        SVG destination
    title : str
    offset : float
        vertical distance between two spectra; defaults to 1.1 times the
        largest intensity
    """
    if offset is None:
        offset = 1.1*max(float(np.max(s.intensities)) for _, s in spectra)
    fig, ax = new_figure(title, "Frequency (GHz)", "Intensity (counts)")
    for i, (label, spectrum) in enumerate(spectra):
        values = np.array(spectrum.intensities, dtype=float) + i*offset
        ax.plot(spectrum.frequencies_hz*1e-9, values, label=label)
        if spectrum.mask is not None:
            ax.plot(spectrum.frequencies_hz[spectrum.mask]*1e-9, values[spectrum.mask], "x",
                    color="grey")
    ax.legend()
    save_svg(fig, path)
