"""Exact symbolic toolkit for simply-laced isomonodromy systems and their quantisation."""

__version__ = "0.1.0"
