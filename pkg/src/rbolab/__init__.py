"""Pseudospectral laboratory for periodic travelling waves of the rBO and BBM equations."""

__version__ = "0.1.0"
