"""Uniformly random alternating sign matrices and their GUE-corners boundary limit."""

__version__ = "0.1.0"
