"""Transformative vs incremental clinical study classification."""

__version__ = "0.1.0"
