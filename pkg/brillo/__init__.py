# File: __init__.py
# Date: 12-10-2026
#
"""
Brillo: maximum entropy and wavelet reconstruction of pixelated Brillouin
spectra, Lorentzian shift estimation and its Cramer-Rao bound.
"""

__version__ = "0.3.0"
