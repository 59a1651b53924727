"""Spectral laboratory for Birman-Schwinger and Schroedinger operators on flat tori."""

__version__ = "0.1.0"
