# File: spectrum_io.py
# Date: 19-10-2026
#
"""
Spectrum interchange through CSV files.

The format is one header line, ``frequency_ghz,intensity`` with an optional
third ``mask`` column, followed by one row per pixel. Decimal point, UTF-8,
LF line endings. Frequencies are written with 12 significant digits and
intensities with the shortest repr that reads back to the same float, so
reading and writing again reproduces the file byte for byte.

Every file is written atomically: the text goes to a temporary file in the
destination directory which is then renamed over the target.
"""

# Imports
import csv
import io
import os
import tempfile

import numpy as np

# Project imports
from .errors import DataError
from .spectrum import Spectrum
from .trace import logger

HEADER = ["frequency_ghz", "intensity"]
MASK_COLUMN = "mask"


def format_ghz(freq_hz: float) -> str:
    return "{:.12g}".format(freq_hz*1e-9)


def format_value(value: float) -> str:
    return repr(float(value))


def atomic_write_text(path: str, text: str):
    """Write 'text' to 'path' through a temporary file and a rename"""
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as tmp:
            tmp.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.debug("written '{}'".format(path))


def spectrum_to_csv(spectrum: Spectrum) -> str:
    """Serialize a spectrum; the mask column appears only when a mask is set"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    with_mask = spectrum.mask is not None
    writer.writerow(HEADER + [MASK_COLUMN] if with_mask else HEADER)
    for i in range(len(spectrum)):
        row = [format_ghz(spectrum.frequencies_hz[i]), format_value(spectrum.intensities[i])]
        if with_mask:
            row.append("1" if spectrum.mask[i] else "0")
        writer.writerow(row)
    return buffer.getvalue()


def write_spectrum(spectrum: Spectrum, path: str):
    atomic_write_text(path, spectrum_to_csv(spectrum))


def parse_spectrum(text: str, source: str = "<text>") -> Spectrum:
    """
    Parse the CSV form of a spectrum.

    Raises DataError with the offending line number on malformed input.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = [name.strip() for name in next(reader)]
    except StopIteration:
        raise DataError("'{}' is empty".format(source))
    if header not in (HEADER, HEADER + [MASK_COLUMN]):
        raise DataError("'{}': unexpected header {}".format(source, ",".join(header)))
    with_mask = len(header) == 3

    freqs = []
    values = []
    mask = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataError("'{}' line {}: expected {} fields, got {}".format(
                source, line_no, len(header), len(row)))
        try:
            freqs.append(float(row[0])*1e9)
            values.append(float(row[1]))
        except ValueError:
            raise DataError("'{}' line {}: not a number".format(source, line_no))
        if with_mask:
            flag = row[2].strip().lower()
            if flag not in ("0", "1", "true", "false"):
                raise DataError("'{}' line {}: mask must be 0 or 1".format(source, line_no))
            mask.append(flag in ("1", "true"))

    if not np.all(np.isfinite(values)):
        raise DataError("'{}': intensities must be finite".format(source))
    return Spectrum(freqs, values, mask if with_mask else None)


def read_spectrum(path: str) -> Spectrum:
    """Load a spectrum from a CSV file"""
    if not os.path.exists(path):
        raise DataError("spectrum file '{}' not found".format(path))
    with open(path, encoding="utf-8", newline="") as csvfile:
        text = csvfile.read()
    spectrum = parse_spectrum(text, path)
    logger.debug("loaded {} from '{}'".format(spectrum, path))
    return spectrum
