"""Pseudo-spectral laboratory for gravity-capillary water waves."""

__version__ = "0.1.0"
