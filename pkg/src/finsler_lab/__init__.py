"""Numerical laboratory for Berwald and symmetric Finsler spaces."""

__version__ = "0.1.0"
