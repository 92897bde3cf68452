"""Transient elastodynamics of the half-plane via spectral integral representations."""

__version__ = "0.1.0"
