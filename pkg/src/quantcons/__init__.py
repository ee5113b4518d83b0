"""Finite-time exact quantized average consensus with transmission stopping."""

__version__ = "0.1.0"
