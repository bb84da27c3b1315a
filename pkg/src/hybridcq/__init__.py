"""Moment-level simulation of hybrid classical-quantum systems."""

__version__ = "0.1.0"
