"""Simulation and analysis of polarisation / frequency / OAM hyperentangled photon pairs."""
from . import hilbert, interference, noise, optics, source, spectral, tomography

__version__ = "0.1.0"
