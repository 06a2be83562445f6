"""Exact computations with the rank-3 quantum torus Lie algebra."""

__version__ = "0.1.0"
