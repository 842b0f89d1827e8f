"""Random-matrix models for families of L-functions with forced zeros."""

__version__ = "0.1.0"
