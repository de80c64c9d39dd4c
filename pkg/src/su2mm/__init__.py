"""Classical simulation toolkit for the truncated SU(2) one-matrix model."""

__version__ = "0.1.0"
