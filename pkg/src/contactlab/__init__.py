"""Numerical laboratory for contact non-squeezing in lens spaces."""

__version__ = "0.1.0"
