"""Spatial-photonic Ising machine simulator."""

__version__ = "0.1.0"
