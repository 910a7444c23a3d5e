"""Distributed tiled image extrapolation."""

__version__ = "0.1.0"
