"""Benchmark toolkit for fingerprint presentation attack detection
generalisation experiments on multispectral (SWIR + laser) data."""

__version__ = "0.1.0"
