"""Discrete-event simulator of a 5G-TSN bridge in an indoor factory."""

__version__ = "0.1.0"
